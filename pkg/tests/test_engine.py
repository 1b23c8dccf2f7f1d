"""Protocol engine: golden cyclic trace, stopping, invariants, decoding."""

import numpy as np
import pytest

from arcnc.engine import (
    SOURCE_IDENTITY,
    Engine,
    classify_nodes,
    count_random_links,
    run,
)
from arcnc.netgraph import Network, multicast_rate
from arcnc.topologies import (
    SHUTTLE_EXAMPLE_KERNELS as SHUTTLE_GOLDEN,
    gen_combination,
    gen_rgg,
    gen_shuttle,
    gen_sparsified,
    gen_umbrella,
)


def golden_engine(steps=2, **kw):
    net = gen_shuttle()
    eng = Engine(
        net, 2, rng=np.random.default_rng(kw.pop("seed", 0)),
        source_mode=SOURCE_IDENTITY, inject=SHUTTLE_GOLDEN, **kw,
    )
    for t in range(steps):
        eng.step(t)
    return net, eng


def test_golden_shuttle_kernel_matrices():
    net, eng = golden_engine(steps=2, validate_symbols=True)
    # F_{r1}(z) = [[1, 1], [0, z]] over in-edges (e1, e7)
    assert eng.f[0] == [(1, 0), (0, 0)]
    assert eng.f[6] == [(1, 0), (0, 1)]
    # F_{r2}(z) = [[0, z], [1, 1+z]] over in-edges (e2, e10)
    assert eng.f[1] == [(0, 1), (0, 0)]
    assert eng.f[9] == [(0, 1), (1, 1)]
    assert eng.t_r == {1: 1, 2: 1}
    assert eng.done_t == 1
    assert eng.l_v == {0: 0, 1: 1, 2: 1, 3: 1, 4: 1, 5: 1, 6: 1}


def test_golden_shuttle_symbols():
    net, eng = golden_engine(steps=2)
    x = eng.x
    # at t=0 the first sink sees only the first source symbol, the second
    # sink only the second one: neither can decode yet
    assert eng.y[0][0] == x[0][0] and eng.y[6][0] == x[0][0]
    assert eng.y[1][0] == x[0][1] and eng.y[9][0] == x[0][1]
    assert eng.ack_log == [] or all(t >= 1 for t, _ in eng.ack_log)
    # the middle-cycle edge carries x_{1,1} + x_{2,0} at t=1 even though its
    # second parent's symbol is computed later in the sweep
    assert eng.y[4][1] == x[1][0] ^ x[0][1]


def test_golden_shuttle_stream_recovery_with_delay_one():
    net = gen_shuttle()
    tr = run(
        net, 2, rng=np.random.default_rng(5), source_mode=SOURCE_IDENTITY,
        inject=SHUTTLE_GOLDEN, stream_len=50, keep_streams=True, validate_symbols=True,
    )
    assert tr.success and tr.t_n == 1
    assert tr.t_r == {1: 1, 2: 1}
    assert tr.decode_checked
    for r in (1, 2):
        assert len(tr.decoded[r]) == 49  # exactly one step behind 50 received


def test_golden_trace_dump_is_stable():
    net, eng = golden_engine(steps=1, tracing=True)
    assert "t=0 draw e1->e3 1" in eng.trace_lines
    assert "t=0 draw e7->e3 0" in eng.trace_lines
    sym_lines = [l for l in eng.trace_lines if l.startswith("t=0 sym")]
    assert len(sym_lines) == 10


def test_all_zero_assignment_never_decodes():
    net = gen_shuttle()
    inject = {pair: [0, 0, 0, 0] for pair in SHUTTLE_GOLDEN}
    tr = run(net, 2, rng=np.random.default_rng(1), source_mode=SOURCE_IDENTITY,
             inject=inject, t_max=3)
    assert not tr.success
    assert tr.t_r == {}
    assert tr.t_n is None


def test_inject_validation():
    net = gen_shuttle()
    with pytest.raises(ValueError):
        Engine(net, 2, inject={(0, 9): [1]})  # not an adjacent pair
    with pytest.raises(ValueError):
        Engine(net, 2, inject={(4, 6): [1]})  # relay kernels are pinned
    with pytest.raises(ValueError):
        Engine(net, 2, inject={(6, 2): [1, 0]})  # masked pair must start at 0
    eng = Engine(net, 2, rng=np.random.default_rng(0))
    eng.step(0)
    with pytest.raises(ValueError):
        eng.inject_kernels({(0, 2): [1]})  # too late, draws already happened


def test_relays_route_instead_of_code():
    net = gen_shuttle()
    eng = Engine(net, 2, rng=np.random.default_rng(0))
    coding, relays = classify_nodes(net)
    assert sorted(relays) == [3, 5]  # v1 and v3
    assert sorted(coding) == [1, 2, 4, 6]
    for pair in ((4, 6), (4, 7), (5, 8), (5, 9)):
        assert eng.kernels[pair] == [1]

    comb = gen_combination(5, 2)
    coding, relays = classify_nodes(comb)
    assert coding == []  # only the source codes
    assert sorted(relays) == [1, 2, 3, 4, 5]
    assert count_random_links(comb) == 5  # the n source arcs

    umb = gen_umbrella(5, 3)
    coding, _ = classify_nodes(umb)
    assert set(coding) == set(umb.shaded)


def test_eta_counts():
    assert count_random_links(gen_shuttle()) == 6
    assert count_random_links(gen_shuttle(), SOURCE_IDENTITY) == 4
    assert count_random_links(gen_combination(3, 2)) == 3


def test_symbol_identity_and_fixpoint_on_many_traces():
    # Eq-style identity y_{e,t} = sum_i x_{t-i} f_{e,i} plus the one-sweep
    # fixpoint property are asserted inside the engine in validate mode
    for net, q in [
        (gen_shuttle(), 2),
        (gen_shuttle(), 4),
        (gen_combination(4, 2), 2),
        (gen_sparsified(6, 2), 4),
        (gen_umbrella(5, 3), 4),
        (gen_rgg(14, 3, 0.5, cyclic=True, rng=np.random.default_rng(2)), 4),
    ]:
        for seed in range(5):
            tr = run(net, q, rng=np.random.default_rng(seed), validate_symbols=True)
            assert tr.success


def test_per_edge_freezing_keeps_growing_toward_slow_children():
    # two sinks behind one coding node: the fast child's kernels freeze as
    # soon as it decodes, the slow child's keep growing
    edges = [(0, 1), (0, 1), (1, 2), (1, 3), (1, 3)]
    net = Network.build(4, edges, 0, (2, 3))
    assert multicast_rate(net) == 1
    found = False
    for seed in range(200):
        eng = Engine(net, 2, rng=np.random.default_rng(seed))
        for t in range(20):
            eng.step(t)
            if eng.done_t is not None:
                break
        t2, t3 = eng.t_r[2], eng.t_r[3]
        if t2 < t3:
            found = True
            assert len(eng.kernels[(0, 2)]) == t2 + 1  # frozen at the ack
            assert len(eng.kernels[(0, 3)]) == t3 + 1  # kept growing
    assert found


def test_stopping_is_absorbing_and_kernels_freeze():
    net = gen_sparsified(6, 2)
    eng = Engine(net, 2, rng=np.random.default_rng(3))
    m = multicast_rate(net)
    stopped_at = {}
    kernel_len_at_stop = {}
    for t in range(30):
        eng.step(t)
        for v in range(net.num_nodes):
            if eng.stopped[v] and v not in stopped_at:
                stopped_at[v] = t
                kernel_len_at_stop[v] = {
                    pair: len(eng.kernels[pair])
                    for pair in eng.kernels
                    if net.tail(pair[1]) == v
                }
            if v in stopped_at:
                assert eng.stopped[v]  # absorbing
        if eng.done_t is not None:
            break
    for _ in range(3):
        eng.step(eng.t_next)
    for v, lens in kernel_len_at_stop.items():
        for pair, length in lens.items():
            assert len(eng.kernels[pair]) == length


def test_always_true_termination_invariants():
    nets = [
        (gen_shuttle(), 2),
        (gen_combination(6, 2), 2),
        (gen_sparsified(8, 2), 2),
        (gen_umbrella(5, 3), 2),
    ]
    for net, q in nets:
        m = multicast_rate(net)
        for i in range(300):
            tr = run(net, q, rng=np.random.default_rng((55, q, i)), m=m,
                     validate_decoding=False)
            if not tr.success:
                continue
            assert tr.t_n == max(tr.t_r.values())
            assert max(tr.l_v.values()) <= tr.t_n
            assert all(tr.l_v[v] <= tr.t_n for v in tr.l_v)


def test_degree_equalities_hold_in_generic_position():
    """T_N = max L_v and L_r >= T_r: exact for q=16 on this seeded batch.

    Over GF(2) these equalities fail with small probability (a
    freshly decodable sink can have an all-zero top coefficient block), so
    they are generic-position facts, not invariants; the companion test
    below pins the counterexample.
    """
    nets = [gen_shuttle(), gen_combination(6, 2), gen_sparsified(8, 2), gen_umbrella(5, 3)]
    for net in nets:
        m = multicast_rate(net)
        for i in range(150):
            tr = run(net, 16, rng=np.random.default_rng((77, i)), m=m,
                     validate_decoding=False)
            assert tr.success
            assert tr.t_n == max(tr.t_r.values()) == max(tr.l_v.values())
            assert all(tr.l_v[r] >= tr.t_r[r] for r in tr.sink_order)


def test_degree_equalities_fail_sometimes_at_q2_but_decoding_survives():
    net = gen_shuttle()
    violations = 0
    total = 0
    for i in range(400):
        tr = run(net, 2, rng=np.random.default_rng((1234, i)), m=2)
        if not tr.success:
            continue
        total += 1
        if any(tr.l_v[r] < tr.t_r[r] for r in tr.sink_order):
            violations += 1
            assert tr.decode_checked  # the decoder is still exact
    assert 0 < violations < 0.2 * total


def test_success_probability_beats_group_bound_on_combination():
    # success frequency by time t stays above (1 - d/q^(t+1))^eta - 3 sigma
    # wherever q^(t+1) > d
    net = gen_combination(3, 2)
    d, eta = 3, count_random_links(net)
    assert eta == 3
    trials = 3000
    for q, t in ((2, 1), (2, 2), (4, 0), (4, 1)):
        assert q ** (t + 1) > d
        wins = 0
        for i in range(trials):
            tr = run(net, q, t_max=t, rng=np.random.default_rng((41, q, i)), m=2,
                     validate_decoding=False)
            wins += tr.success
        bound = (1 - d / q ** (t + 1)) ** eta
        sigma = (bound * (1 - bound) / trials) ** 0.5
        assert wins / trials >= bound - 3 * sigma


def test_group_bound_fails_on_masked_cyclic_shuttle():
    """The grouped-extension-field bound does not transfer to the masked
    shuttle: at t=0 the first sink's two in-streams are proportional (its
    feedback kernel coefficient is forced to zero), so no draw decodes,
    while the formula would claim a positive floor for q > 2.
    """
    net = gen_shuttle()
    d, eta, q = 2, count_random_links(net), 4
    bound_t0 = (1 - d / q) ** eta
    assert bound_t0 > 0
    for i in range(400):
        tr = run(net, q, t_max=0, rng=np.random.default_rng((31, i)), m=2,
                 validate_decoding=False)
        assert not tr.success


def test_fallback_mask_still_decodes_with_larger_delay():
    edges = [(0, 1), (0, 2), (1, 3), (2, 3), (3, 4), (3, 5)]
    plain = Network.build(6, edges, 0, (4, 5))
    slow = Network.build(6, edges, 0, (4, 5), mask="all_zero")
    t_plain, t_slow = [], []
    for i in range(120):
        a = run(plain, 4, rng=np.random.default_rng((9, i)), validate_decoding=False)
        b = run(slow, 4, rng=np.random.default_rng((9, i)), validate_decoding=False)
        assert b.success
        if a.success:
            t_plain.append(a.t_n)
        t_slow.append(b.t_n)
    assert np.mean(t_slow) > np.mean(t_plain)


def test_fallback_mask_on_cyclic_net_decodes():
    net_default = gen_shuttle()
    net = Network.build(7, net_default.edges, 0, (1, 2), mask="all_zero")
    assert len(net.zero_mask) == 12
    tr = run(net, 4, rng=np.random.default_rng(4), validate_symbols=True)
    assert tr.success and tr.decode_checked


def test_horizon_zero_failure_record():
    net = gen_shuttle()
    tr = run(net, 2, t_max=0, rng=np.random.default_rng(0))
    assert not tr.success and tr.t_n is None and tr.t_r == {}


def test_m_mismatch_rejected():
    net = gen_combination(4, 2)
    with pytest.raises(ValueError):
        Engine(net, 2, rng=np.random.default_rng(0), m=3)


def test_identity_source_pins_first_m_edges():
    # first m source edges carry fixed unit columns; the rest draw and grow
    net = gen_combination(4, 2)
    eng = Engine(net, 4, rng=np.random.default_rng(8), source_mode=SOURCE_IDENTITY)
    for t in range(30):
        eng.step(t)
        if eng.done_t is not None:
            break
    assert eng.done_t is not None
    assert eng.f[0][0] == (1, 0) and all(not any(c) for c in eng.f[0][1:])
    assert eng.f[1][0] == (0, 1) and all(not any(c) for c in eng.f[1][1:])


def test_run_is_deterministic_for_a_seed():
    net = gen_umbrella(5, 3)
    a = run(net, 4, rng=np.random.default_rng(77))
    b = run(net, 4, rng=np.random.default_rng(77))
    assert a.t_r == b.t_r and a.l_v == b.l_v and a.t_n == b.t_n


def test_sink_with_children_acks_only_after_subtree():
    # shaded umbrella nodes must not release their parents before their own
    # descendants decode
    net = gen_umbrella(5, 3)
    eng = Engine(net, 4, rng=np.random.default_rng(13))
    for t in range(40):
        eng.step(t)
        for v in net.shaded:
            if eng.acked[v]:
                assert all(eng.acked[c] for c in eng.children[v])
                assert v in eng.t_r
        if eng.done_t is not None:
            break
    assert eng.done_t is not None


def test_kernel_degree_tracks_stream_degree():
    # memory sizing guideline: local kernel degree stays within the node's
    # stored stream degree (deterministic for these seeds; random
    # cancellations can break it in principle)
    net = gen_umbrella(5, 3)
    m = multicast_rate(net)
    for i in range(40):
        eng = Engine(net, 16, rng=np.random.default_rng((21, i)), m=m)
        for t in range(40):
            eng.step(t)
            if eng.done_t is not None:
                break
        for v in list(net.shaded):
            k_deg = -1
            for pair in eng.kernels:
                if net.tail(pair[1]) == v:
                    coeffs = eng.kernels[pair]
                    nz = [i for i, c in enumerate(coeffs) if c]
                    k_deg = max(k_deg, nz[-1] if nz else -1)
            assert k_deg <= eng.l_v[v]
