"""Graph families and the counterexample constructions.

:func:`generate` builds the standard families (stars, cycle powers, complete
d-ary trees, clique unions, random regular and Erdos-Renyi graphs).
:func:`generate_counterexample` builds the tightness constructions together
with the seed placement that defeats the corresponding resilience bound.

Non-integral sizes are rounded the same way everywhere: component counts are
floored, the last component absorbs the remainder.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Any

import numpy as np

from .diffusion import SeedColoring
from .errors import (
    GenerationRetriesExhaustedError,
    InvalidSpecError,
    NonIntegralPartitionError,
)
from .graph import Graph, build_graph, disjoint_union

FAMILIES = ("star", "cycle_power", "dary_tree", "clique_union", "random_regular", "erdos_renyi")
COUNTEREXAMPLES = ("regular_non_expander", "prop1_cycle_trees", "core_dominated", "star_forest")

_FUZZ = 1e-9


def round_half_up(x: float) -> int:
    """Nearest integer, halves upward; absorbs float noise such as 0.3 * 10."""
    return int(math.floor(x + 0.5 + _FUZZ))


def floor_fuzzy(x: float) -> int:
    return int(math.floor(x + _FUZZ))


@dataclass(frozen=True)
class FamilySpec:
    family: str
    n: int | None = None
    delta: int | None = None
    depth: int | None = None
    d: int | None = None
    sizes: tuple[int, ...] = ()
    p: float | None = None
    max_retries: int = 1000

    def to_dict(self) -> dict:
        out = {k: v for k, v in asdict(self).items() if v not in (None, ())}
        if self.sizes:
            out["sizes"] = list(self.sizes)
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "FamilySpec":
        data = dict(data)
        if "sizes" in data:
            data["sizes"] = tuple(int(s) for s in data["sizes"])
        return cls(**data)

    def validate(self) -> None:
        def need(*names):
            for name in names:
                if getattr(self, name) is None:
                    raise InvalidSpecError(f"{self.family} requires '{name}'")

        def positive(name):
            value = getattr(self, name)
            if value is None or value < 1:
                raise InvalidSpecError(f"{self.family}: '{name}' must be a positive integer")

        f = self.family
        if f not in FAMILIES:
            raise InvalidSpecError(f"unknown family {f!r}")
        if f == "star":
            positive("n")
        elif f == "cycle_power":
            positive("n")
            positive("delta")
            if 2 * self.delta >= self.n:
                raise InvalidSpecError("cycle_power needs 2*delta < n to be 2*delta-regular")
        elif f == "dary_tree":
            need("depth")
            positive("d")
            if self.depth < 0:
                raise InvalidSpecError("dary_tree depth must be >= 0")
        elif f == "clique_union":
            if not self.sizes or min(self.sizes) < 1:
                raise InvalidSpecError("clique_union needs positive clique sizes")
        elif f == "random_regular":
            positive("n")
            need("d")
            if self.d < 0 or self.d >= self.n or (self.n * self.d) % 2:
                raise InvalidSpecError("random_regular needs 0 <= d < n and n*d even")
            if self.max_retries < 1:
                raise InvalidSpecError("max_retries must be positive")
        elif f == "erdos_renyi":
            positive("n")
            need("p")
            if not 0.0 <= self.p <= 1.0:
                raise InvalidSpecError("erdos_renyi needs p in [0, 1]")


def star(n: int) -> Graph:
    return build_graph(n, [(0, v) for v in range(1, n)])


def cycle_power(n: int, delta: int) -> Graph:
    """Nodes on a cycle, each joined to everything within cycle distance ``delta``."""
    base = np.arange(n, dtype=np.int64)
    edges = [np.stack([base, (base + k) % n], axis=1) for k in range(1, delta + 1)]
    return build_graph(n, np.concatenate(edges))


def circulant_regular(n: int, d: int) -> Graph:
    """A d-regular circulant on ``n`` nodes (antipodal chords when d is odd)."""
    if d >= n or (n * d) % 2:
        raise InvalidSpecError(f"no {d}-regular circulant on {n} nodes")
    if d == 0:
        return build_graph(n, [])
    base = np.arange(n, dtype=np.int64)
    offsets = list(range(1, d // 2 + 1)) + ([n // 2] if d % 2 else [])
    edges = np.concatenate([np.stack([base, (base + k) % n], axis=1) for k in offsets])
    return build_graph(n, edges)


def heap_tree(size: int, d: int) -> Graph:
    """Complete d-ary tree on ``size`` nodes in heap order (node i's parent is (i-1)//d)."""
    child = np.arange(1, size, dtype=np.int64)
    return build_graph(size, np.stack([(child - 1) // d, child], axis=1))


def dary_tree(depth: int, d: int) -> Graph:
    size = depth + 1 if d == 1 else (d ** (depth + 1) - 1) // (d - 1)
    return heap_tree(size, d)


def clique(k: int) -> Graph:
    iu = np.triu_indices(k, 1)
    return build_graph(k, np.stack(iu, axis=1))


def clique_union(sizes) -> Graph:
    return disjoint_union([clique(k) for k in sizes])


def _pairing_attempt(n: int, d: int, rng: np.random.Generator) -> np.ndarray | None:
    stubs = np.repeat(np.arange(n, dtype=np.int64), d)
    rng.shuffle(stubs)
    u = np.minimum(stubs[0::2], stubs[1::2])
    v = np.maximum(stubs[0::2], stubs[1::2])
    if (u == v).any():
        return None
    codes = u * n + v
    if np.unique(codes).size != codes.size:
        return None
    return np.stack([u, v], axis=1)


def _incremental_attempt(n: int, d: int, rng: np.random.Generator,
                         stall_limit: int = 30) -> np.ndarray | None:
    # Pair stubs, keep the admissible pairs, re-pair the rest; give up once
    # the leftover stubs stop producing new edges.
    stubs = np.repeat(np.arange(n, dtype=np.int64), d)
    accepted = np.empty(0, dtype=np.int64)
    stalls = 0
    while stubs.size:
        rng.shuffle(stubs)
        u = np.minimum(stubs[0::2], stubs[1::2])
        v = np.maximum(stubs[0::2], stubs[1::2])
        codes = u * n + v
        ok = u != v
        ok &= ~np.isin(codes, accepted)
        _, first = np.unique(codes, return_index=True)
        fresh = np.zeros(codes.size, dtype=bool)
        fresh[first] = True
        ok &= fresh
        if ok.any():
            accepted = np.sort(np.concatenate([accepted, codes[ok]]))
            stalls = 0
        else:
            stalls += 1
            if stalls >= stall_limit:
                return None
        stubs = np.concatenate([u[~ok], v[~ok]])
    return np.stack([accepted // n, accepted % n], axis=1)


def random_regular(n: int, d: int, rng: np.random.Generator, max_retries: int = 1000,
                   method: str = "auto") -> Graph:
    """Simple d-regular graph from the pairing model.

    ``method="restart"`` rejects the whole pairing on any loop or repeated
    pair; ``"incremental"`` keeps admissible pairs and re-pairs the leftover
    stubs, restarting only when stuck.  ``"auto"`` restarts for d <= 4, where
    a pairing is simple with probability about exp((1 - d*d)/4), and goes
    incremental above that.
    """
    if d == 0:
        return build_graph(n, [])
    if method == "auto":
        method = "restart" if d <= 4 else "incremental"
    attempt = _pairing_attempt if method == "restart" else _incremental_attempt
    for _ in range(max_retries):
        edges = attempt(n, d, rng)
        if edges is not None:
            return build_graph(n, edges)
    raise GenerationRetriesExhaustedError(
        f"no simple {d}-regular graph on {n} nodes after {max_retries} attempts")


def erdos_renyi(n: int, p: float, rng: np.random.Generator) -> Graph:
    parts = []
    for i in range(n - 1):
        hits = np.flatnonzero(rng.random(n - i - 1) < p)
        if hits.size:
            parts.append(np.stack([np.full(hits.size, i), hits + i + 1], axis=1))
    edges = np.concatenate(parts) if parts else np.empty((0, 2), dtype=np.int64)
    return build_graph(n, edges)


def generate(spec: FamilySpec, rng: np.random.Generator | None = None) -> Graph:
    spec.validate()
    f = spec.family
    if f == "star":
        return star(spec.n)
    if f == "cycle_power":
        return cycle_power(spec.n, spec.delta)
    if f == "dary_tree":
        return dary_tree(spec.depth, spec.d)
    if f == "clique_union":
        return clique_union(spec.sizes)
    if rng is None:
        raise InvalidSpecError(f"{f} needs a random generator")
    if f == "random_regular":
        return random_regular(spec.n, spec.d, rng, spec.max_retries)
    return erdos_renyi(spec.n, spec.p, rng)


# -- counterexamples --------------------------------------------------------

@dataclass(frozen=True)
class CounterexampleSpec:
    kind: str
    n: int
    d: int | None = None
    alpha: float | None = None
    epsilon: float | None = None
    mu: float | None = None
    t: int | None = None
    s: int | None = None

    def to_dict(self) -> dict:
        return {k: v for k, v in asdict(self).items() if v is not None}

    @classmethod
    def from_dict(cls, data: dict) -> "CounterexampleSpec":
        return cls(**data)

    def _need(self, *names) -> None:
        for name in names:
            if getattr(self, name) is None:
                raise InvalidSpecError(f"{self.kind} requires '{name}'")

    def _open_unit_half(self, *names, closed: bool = False) -> None:
        for name in names:
            value = getattr(self, name)
            if not (0 < value < 0.5 or (closed and value == 0.5)):
                bracket = "]" if closed else ")"
                raise InvalidSpecError(f"{self.kind}: '{name}' must lie in (0, 1/2{bracket}")


@dataclass
class Counterexample:
    """A generated construction plus its attacker hints.

    ``seed_hint`` lists the prescribed seed nodes.  For strong-attacker
    constructions ``coloring`` is the winning coloring and the hint is ordered
    White seeds first, so an Explicit strong attacker reproduces it.
    """

    spec: CounterexampleSpec
    graph: Graph
    seed_hint: list[int]
    coloring: SeedColoring | None = None
    roles: dict[str, Any] = field(default_factory=dict)
    notes: list[str] = field(default_factory=list)

    def sidecar(self) -> dict:
        out = {"kind": self.spec.kind, "spec": self.spec.to_dict(), "n": self.graph.n,
               "m": self.graph.m, "seed_hint": list(self.seed_hint), "roles": self.roles,
               "notes": list(self.notes)}
        if self.coloring is not None:
            out["coloring"] = {"black": self.coloring.black.tolist(),
                               "white": self.coloring.white.tolist()}
        return out


def _split(total: int, parts: int) -> list[int]:
    base = total // parts
    return [base] * (parts - 1) + [total - base * (parts - 1)]


def _regular_non_expander(spec: CounterexampleSpec) -> Counterexample:
    spec._need("d", "alpha", "epsilon")
    # the construction itself is well defined at alpha = 1/2
    spec._open_unit_half("alpha", closed=True)
    spec._open_unit_half("epsilon")
    n, d = spec.n, spec.d
    r0 = round_half_up(spec.alpha * n)
    white = round_half_up((0.5 + spec.epsilon) * r0)
    black = r0 - white
    n1, n2 = white, n - white
    if d < 2:
        raise InvalidSpecError("regular_non_expander needs d >= 2")
    for size in (n1, n2):
        if size <= d or (size * d) % 2:
            raise NonIntegralPartitionError(
                f"component of {size} nodes cannot be {d}-regular (sizes {n1}, {n2})")
    if black > n2:
        raise InvalidSpecError("not enough room for the Black seeds")
    g = disjoint_union([circulant_regular(n1, d), circulant_regular(n2, d)])
    whites = list(range(n1))
    blacks = list(range(n1, n1 + black))
    coloring = SeedColoring.from_sets(blacks, whites)
    roles = {"components": [[0, n1], [n1, n]], "white_component": [0, n1]}
    notes = [f"white seed count {white} = round((1/2+eps)*round(alpha*n)) sizes the first component"]
    return Counterexample(spec, g, whites + blacks, coloring, roles, notes)


def _prop1_cycle_trees(spec: CounterexampleSpec) -> Counterexample:
    spec._need("alpha", "epsilon", "mu", "t")
    spec._open_unit_half("alpha", "epsilon")
    n, a, e, mu, t = spec.n, spec.alpha, spec.epsilon, spec.mu, spec.t
    if not 0 < mu < 1 or t < 1:
        raise InvalidSpecError("prop1_cycle_trees needs mu in (0, 1) and t >= 1")
    s_exact = math.log2(1 / mu) / (2 + 8 * e)
    s = floor_fuzzy(s_exact)
    if s < 1:
        raise InvalidSpecError(f"s = log2(1/mu)/(2+8 eps) = {s_exact:.3f} < 1")
    d_exact = ((3 * a * e * n + 1) / s) ** (1 / t)
    d = max(2, round_half_up(d_exact))
    tree_size = floor_fuzzy(((1 - a) * n + s) / s)
    cycle_len = n - s * tree_size
    if cycle_len < 3:
        raise InvalidSpecError("cycle part has fewer than 3 nodes")
    if tree_size < d + 2:
        raise NonIntegralPartitionError(
            f"trees of {tree_size} nodes are too small for arity {d}")
    tree_sizes = [tree_size] * s
    parts = [circulant_regular(cycle_len, 2)] + [heap_tree(k, d) for k in tree_sizes]
    g = disjoint_union(parts)
    roots = list(np.cumsum([cycle_len] + tree_sizes[:-1]).tolist())
    hint = list(range(cycle_len)) + roots
    roles = {"cycle": [0, cycle_len], "tree_roots": roots, "tree_sizes": tree_sizes, "arity": d, "s": s}
    notes = [f"s = floor({s_exact:.4f}) = {s}",
             f"d = max(2, round({d_exact:.4f})) = {d}",
             f"tree size floor(((1-alpha)*n+s)/s) = {tree_size}; cycle padded to {cycle_len} nodes"]
    return Counterexample(spec, g, hint, None, roles, notes)


def _core_dominated(spec: CounterexampleSpec) -> Counterexample:
    spec._need("s")
    n, s = spec.n, spec.s
    if not 1 <= s < n:
        raise InvalidSpecError("core_dominated needs 1 <= s < n")
    outer = np.arange(s, n, dtype=np.int64)
    edges = np.stack([np.tile(np.arange(s), outer.size), np.repeat(outer, s)], axis=1)
    g = build_graph(n, edges)
    core = list(range(s))
    return Counterexample(spec, g, core, None, {"core": core}, [])


def core_size_for(alpha: float, epsilon: float, mu: float) -> int:
    """Core size ceil(log_{(1/2-eps)alpha} mu) - 1 of the weak-attacker tightness graph."""
    x = math.log(mu) / math.log((0.5 - epsilon) * alpha)
    return max(1, math.ceil(x - _FUZZ) - 1)


def _star_forest(spec: CounterexampleSpec) -> Counterexample:
    spec._need("s")
    n, s = spec.n, spec.s
    if not 1 <= s or n < 2 * s:
        raise InvalidSpecError("star_forest needs n >= 2s stars of at least 2 nodes")
    sizes = _split(n, s)
    g = disjoint_union([star(k) for k in sizes])
    centers = list(np.cumsum([0] + sizes[:-1]).tolist())
    return Counterexample(spec, g, centers, None, {"centers": centers, "star_sizes": sizes}, [])


def generate_counterexample(spec: CounterexampleSpec,
                            rng: np.random.Generator | None = None) -> Counterexample:
    """Build one of the tightness constructions (all are deterministic; ``rng`` is unused)."""
    builders = {
        "regular_non_expander": _regular_non_expander,
        "prop1_cycle_trees": _prop1_cycle_trees,
        "core_dominated": _core_dominated,
        "star_forest": _star_forest,
    }
    if spec.kind not in builders:
        raise InvalidSpecError(f"unknown counterexample kind {spec.kind!r}")
    if spec.n is None or spec.n < 1:
        raise InvalidSpecError("n must be positive")
    return builders[spec.kind](spec)


__all__ = [
    "FamilySpec", "CounterexampleSpec", "Counterexample", "generate",
    "generate_counterexample", "round_half_up", "core_size_for",
]
