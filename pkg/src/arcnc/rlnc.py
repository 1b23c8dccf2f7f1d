"""One-shot random linear code baseline and its field-size requirements.

The baseline draws every coefficient once, at t=0, over an acyclic network;
a run succeeds when the constant kernel matrix at every sink has full rank.
Kernel draws follow the adaptive engine's slot order exactly, so a baseline
run and an adaptive run truncated at t=0 agree trial for trial when fed the
same generator.
"""

from __future__ import annotations

import math

import numpy as np

from .engine import SOURCE_IDENTITY, SOURCE_RANDOM, classify_nodes
from .gf import GF
from .netgraph import Network, has_cycle, multicast_rate
from .polymatrix import rank_gf

__all__ = [
    "rlnc_run",
    "rlnc_field_bits_umbrella",
    "rlnc_field_bits_sparsified",
    "rlnc_min_q_for_target",
]


def rlnc_run(
    net: Network,
    q: int,
    rng: np.random.Generator,
    m: int | None = None,
    source_mode: str = SOURCE_RANDOM,
) -> bool:
    """One-shot constant-kernel run; True iff every sink sees full rank."""
    if has_cycle(net):
        raise ValueError("one-shot baseline is restricted to acyclic networks")
    field = GF.for_q(q)
    if m is None:
        m = multicast_rate(net)
    coding, relays = classify_nodes(net)
    by_pos = lambda e: net.edge_pos[e]
    src_out = sorted(net.out_edges[net.source], key=by_pos)

    slots = []
    src_drawn = src_out if source_mode == SOURCE_RANDOM else src_out[m:]
    for e in src_drawn:
        slots.extend(("src", e, i) for i in range(m))
    for v in coding:
        for e_out in sorted(net.out_edges[v], key=by_pos):
            for e_in in sorted(net.in_edges[v], key=by_pos):
                slots.append(("k", e_in, e_out))
    vals = [int(v) for v in rng.integers(0, q, size=len(slots))] if slots else []

    src_cols: dict[int, list[int]] = {e: [0] * m for e in src_out}
    kernel: dict[tuple[int, int], int] = {}
    for v in relays:
        e_in = net.in_edges[v][0]
        for e_out in net.out_edges[v]:
            kernel[(e_in, e_out)] = 1
    for slot, val in zip(slots, vals):
        if slot[0] == "src":
            src_cols[slot[1]][slot[2]] = val
        else:
            kernel[(slot[1], slot[2])] = val

    f = [None] * len(net.edges)
    for e in net.edge_order:
        v = net.tail(e)
        if v == net.source:
            pos = src_out.index(e)
            if source_mode == SOURCE_IDENTITY and pos < m:
                col = np.zeros(m, dtype=np.int64)
                col[pos] = 1
            else:
                col = np.array(src_cols[e], dtype=np.int64)
        else:
            col = np.zeros(m, dtype=np.int64)
            for e_in in net.in_edges[v]:
                c = kernel.get((e_in, e), 0)
                if c:
                    col ^= field.mul_vec(c, f[e_in])
        f[e] = col
    for r in net.sinks:
        mat = np.array([f[e] for e in net.in_edges[r]], dtype=np.int64).T
        if rank_gf(field, mat) != m:
            return False
    return True


def rlnc_field_bits_umbrella(beta: int, epsilon: float) -> float:
    """Lower bound on ceil(log2 q) for the one-shot code on an umbrella:
    -log2(1 - (1-eps)^(1/(2*beta)))."""
    if beta < 1:
        raise ValueError("beta must be >= 1")
    if not 0 < epsilon < 1:
        raise ValueError("epsilon must be in (0, 1)")
    return -math.log2(1.0 - (1.0 - epsilon) ** (1.0 / (2 * beta)))


def rlnc_field_bits_sparsified(n: int, m: int, epsilon: float) -> float:
    """Lower bound on log2 q for the one-shot code on a sparsified
    combination network: log2(1 + (n-m+1)/(1 - sqrt(1-eps)))."""
    if n < m:
        raise ValueError("need n >= m")
    if not 0 < epsilon < 1:
        raise ValueError("epsilon must be in (0, 1)")
    return math.log2(1.0 + (n - m + 1) / (1.0 - math.sqrt(1.0 - epsilon)))


def rlnc_min_q_for_target(
    d: int, eta_or_j: int, target: float, bound_kind: str = "per_node"
) -> int:
    """Smallest power-of-two field size meeting a success-probability target.

    bound_kind 'per_link' uses (1 - d/q)^eta >= target with eta random-coded
    links; 'per_node' uses (1 - d/(q-1))^(j+1) >= target with j encoding
    nodes. Both forms appear in the analysis, so the caller must name one.
    """
    if not 0 < target < 1:
        raise ValueError("target must be in (0, 1)")
    if bound_kind not in ("per_link", "per_node"):
        raise ValueError(f"unknown bound kind {bound_kind!r}")
    for k in range(1, 64):
        q = 1 << k
        if bound_kind == "per_link":
            ok = q > d and (1.0 - d / q) ** eta_or_j >= target
        else:
            ok = q - 1 > d and (1.0 - d / (q - 1)) ** (eta_or_j + 1) >= target
        if ok:
            return q
    raise ValueError("no power-of-two field below 2^64 meets the target")
