"""Generators for the five network families used in the experiments.

Deterministic families (combination, sparsified, umbrella, shuttle) are pure
functions of their parameters; random geometric graphs are pure functions of
(parameters, generator state). Node 0 is always the source.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dataclass_field
from itertools import combinations

import numpy as np

from .netgraph import Network

__all__ = [
    "TopologySpec",
    "build_topology",
    "gen_combination",
    "gen_sparsified",
    "gen_umbrella",
    "gen_shuttle",
    "gen_rgg",
    "FAMILIES",
    "SHUTTLE_EXAMPLE_KERNELS",
]

FAMILIES = (
    "combination",
    "sparsified",
    "umbrella",
    "shuttle",
    "rgg_acyclic",
    "rgg_cyclic",
)


def gen_combination(n: int, m: int) -> Network:
    """Source -> n relay intermediates; one sink per m-subset of them.

    d = C(n, m) sinks, each with min-cut m; only the source ever codes.
    """
    if not 1 <= m <= n:
        raise ValueError(f"need 1 <= m <= n, got n={n}, m={m}")
    edges = [(0, i) for i in range(1, n + 1)]
    sinks = []
    next_id = n + 1
    for subset in combinations(range(1, n + 1), m):
        for parent in subset:
            edges.append((parent, next_id))
        sinks.append(next_id)
        next_id += 1
    return Network.build(next_id, edges, 0, sinks)


def gen_sparsified(n: int, m: int) -> Network:
    """Combination network thinned to consecutive windows: intermediates sit
    on a line and sink i attaches to intermediates i..i+m-1, so a sink is
    related to at most 2(m-1) other sinks."""
    if not 1 <= m <= n:
        raise ValueError(f"need 1 <= m <= n, got n={n}, m={m}")
    edges = [(0, i) for i in range(1, n + 1)]
    sinks = []
    next_id = n + 1
    for i in range(1, n - m + 2):
        for parent in range(i, i + m):
            edges.append((parent, next_id))
        sinks.append(next_id)
        next_id += 1
    return Network.build(next_id, edges, 0, sinks)


def gen_umbrella(alpha: int, beta: int) -> Network:
    """Ring-topped umbrella with a handle of (3 choose 2) combination blocks.

    Layer 1 holds 2*alpha nodes: alpha upper relays fed by the source and
    alpha lower nodes, lower node i fed by upper i and i+1 cyclically, so
    the upper dependency ring is an odd cycle and plain routing cannot work.
    The center lower node is the first shaded node; each of the beta-1
    handle layers hangs a 3-intermediate / 3-bottom combination block off
    the previous shaded node, with the middle bottom shaded next (except in
    the last layer). Must-decode nodes are the childless nodes plus the
    shaded nodes. Total node count is 1 + 2*alpha + 6*(beta-1).
    """
    if alpha < 3 or alpha % 2 == 0:
        raise ValueError(f"alpha must be odd and >= 3, got {alpha}")
    if beta < 2:
        raise ValueError(f"beta must be >= 2, got {beta}")
    edges = []
    upper = list(range(1, alpha + 1))
    lower = list(range(alpha + 1, 2 * alpha + 1))
    for u in upper:
        edges.append((0, u))
    for i in range(alpha):
        w = lower[i]
        edges.append((upper[i], w))
        edges.append((upper[(i + 1) % alpha], w))
    shaded = [lower[(alpha - 1) // 2]]
    next_id = 2 * alpha + 1
    for layer in range(2, beta + 1):
        src = shaded[-1]
        mids = [next_id, next_id + 1, next_id + 2]
        bottoms = [next_id + 3, next_id + 4, next_id + 5]
        next_id += 6
        for mid in mids:
            edges.append((src, mid))
        # bottoms take intermediate pairs {1,2}, {2,3}, {1,3}; the middle
        # slot ({2,3}) is the shaded source of the next layer
        for bottom, (a, b) in zip(bottoms, ((0, 1), (1, 2), (0, 2))):
            edges.append((mids[a], bottom))
            edges.append((mids[b], bottom))
        if layer < beta:
            shaded.append(bottoms[1])
    net_tmp = Network(next_id, edges, 0, (1,))
    childless = [v for v in range(1, next_id) if not net_tmp.out_edges[v]]
    sinks = sorted(set(childless) | set(shaded))
    return Network.build(next_id, edges, 0, sinks, shaded=shaded)


def gen_shuttle() -> Network:
    """The 7-node, 10-edge cyclic worked example with two sinks of min-cut 2.

    Node ids: s=0, r1=1, r2=2, v1=3, v2=4, v3=5, v4=6. Edge insertion order
    yields the canonical labels e1..e10 under breadth-first indexing,
    and the three directed cycles are (e3,e5,e7), (e5,e8,e6,e9), and
    (e4,e6,e10).
    """
    s, r1, r2, v1, v2, v3, v4 = range(7)
    edges = [
        (s, r1),  # e1
        (s, r2),  # e2
        (r1, v4),  # e3
        (r2, v2),  # e4
        (v4, v1),  # e5
        (v2, v3),  # e6
        (v1, r1),  # e7
        (v1, v2),  # e8
        (v3, v4),  # e9
        (v3, r2),  # e10
    ]
    return Network.build(7, edges, s, (r1, r2))


# Worked kernel assignment for the shuttle over GF(2), keyed by adjacent
# pair (edge ids in insertion order, e1=0 .. e10=9), one coefficient per
# time step. Masked pairs carry their forced 0 at t=0. Injected into the
# engine it decodes both sinks at t=1 with kernel matrices
# F_r1(z) = [[1, 1], [0, z]] and F_r2(z) = [[0, z], [1, 1+z]].
SHUTTLE_EXAMPLE_KERNELS = {
    (0, 2): (1, 1),  # k_{e1,e3} = 1+z
    (6, 2): (0, 0),  # k_{e7,e3} = 0
    (1, 3): (1, 0),  # k_{e2,e4} = 1
    (9, 3): (0, 1),  # k_{e10,e4} = z
    (2, 4): (1, 1),  # k_{e3,e5} = 1+z
    (8, 4): (0, 1),  # k_{e9,e5} = z
    (3, 5): (1, 0),  # k_{e4,e6} = 1
    (7, 5): (0, 1),  # k_{e8,e6} = z
}


def gen_rgg(
    num_nodes: int,
    num_sinks: int,
    radius: float,
    cyclic: bool,
    rng: np.random.Generator,
    p_forward_removal: float = 0.2,
    p_backward_removal: float = 0.8,
    max_attempts: int = 10_000,
) -> Network:
    """Random geometric graph on [0,1]^2 with the given connection radius.

    Node 1 (id 0) is the source and the highest-numbered nodes are sinks.
    Acyclic mode keeps only low-to-high directed edges. Cyclic mode starts
    from both directions, removes each low-to-high edge with probability
    p_forward_removal and each high-to-low edge with probability
    p_backward_removal. Edges into the source are dropped either way (the
    model gives the source no inputs). Instances where some sink is
    unreachable are thrown away and regenerated, up to max_attempts.
    """
    if not 0 < num_sinks < num_nodes:
        raise ValueError(f"need 0 < num_sinks < num_nodes, got {num_sinks}, {num_nodes}")
    if radius <= 0:
        raise ValueError("radius must be positive")
    sinks = list(range(num_nodes - num_sinks, num_nodes))
    for _ in range(max_attempts):
        pts = rng.random((num_nodes, 2))
        d2 = np.sum((pts[:, None, :] - pts[None, :, :]) ** 2, axis=-1)
        edges = []
        for i in range(num_nodes):
            for j in range(i + 1, num_nodes):
                if d2[i, j] > radius * radius:
                    continue
                if not cyclic:
                    edges.append((i, j))
                    continue
                keep_fwd = rng.random() >= p_forward_removal
                keep_bwd = rng.random() >= p_backward_removal
                if keep_fwd:
                    edges.append((i, j))
                if keep_bwd and i != 0:
                    edges.append((j, i))
        try:
            return Network.build(num_nodes, edges, 0, sinks)
        except ValueError:
            continue
    raise RuntimeError(f"no connected instance after {max_attempts} attempts")


@dataclass
class TopologySpec:
    """Family name plus its parameters; random families also carry a seed."""

    family: str
    params: dict = dataclass_field(default_factory=dict)
    seed: int | None = None

    _INT_KEYS = ("n", "m", "alpha", "beta", "nodes", "sinks")
    _FLOAT_KEYS = ("radius", "p_forward_removal", "p_backward_removal")

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}; pick from {FAMILIES}")

    def label(self) -> str:
        """Stable id string, e.g. 'combination(n=16,m=2)'."""
        inner = ",".join(f"{k}={self.params[k]}" for k in sorted(self.params))
        return f"{self.family}({inner})"

    def to_kv(self) -> str:
        lines = [f"family={self.family}"]
        for k in sorted(self.params):
            lines.append(f"{k}={self.params[k]}")
        if self.seed is not None:
            lines.append(f"seed={self.seed}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_kv(cls, text: str) -> "TopologySpec":
        family = None
        params = {}
        seed = None
        for raw in text.splitlines():
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"expected key=value, got {line!r}")
            key, val = (part.strip() for part in line.split("=", 1))
            if key == "family":
                family = val
            elif key == "seed":
                seed = int(val)
            elif key in cls._FLOAT_KEYS:
                params[key] = float(val)
            elif key in cls._INT_KEYS:
                params[key] = int(val)
            else:
                raise ValueError(f"unknown topology key {key!r}")
        if family is None:
            raise ValueError("missing family=")
        return cls(family, params, seed)


def build_topology(spec: TopologySpec, rng: np.random.Generator | None = None) -> Network:
    """Instantiate a Network from a TopologySpec."""
    p = spec.params
    if spec.family == "combination":
        return gen_combination(p["n"], p["m"])
    if spec.family == "sparsified":
        return gen_sparsified(p["n"], p["m"])
    if spec.family == "umbrella":
        return gen_umbrella(p["alpha"], p["beta"])
    if spec.family == "shuttle":
        return gen_shuttle()
    if rng is None:
        if spec.seed is None:
            raise ValueError(f"{spec.family} needs a seed or an explicit rng")
        rng = np.random.default_rng(spec.seed)
    kwargs = {}
    for k in ("p_forward_removal", "p_backward_removal"):
        if k in p:
            kwargs[k] = p[k]
    return gen_rgg(
        p["nodes"],
        p["sinks"],
        p["radius"],
        cyclic=(spec.family == "rgg_cyclic"),
        rng=rng,
        **kwargs,
    )
