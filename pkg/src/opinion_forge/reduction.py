"""Clique to Minimum-Influence gadget, brute-force MI oracles, t-hop domination.

Minimum Influence: given ``G`` and budgets ``b``, ``w``, ``t``, place ``b``
Black and ``w`` White seeds to minimize the expected number of White nodes
after ``t`` rounds (fair-coin ties).

The gadget turns a clique instance ``(G', k)`` into an MI instance with
``b = k``, ``w = C(k, 2)``, ``t = 2``.  Node ids are laid out in blocks::

    [0, n')                     original nodes v_i (same ids as in G')
    [n', n'(s+1))               clique partners V_i, s per original
    [n'(s+1), n'(s+1)+m')       edge nodes u_j, one per edge of G'
    next m' * s ids             clique partners U_j, s per edge node
    last m' ids                 leaves q_j

Since Whites never change, ``E[w_hat_t] >= w`` for every placement, with
equality exactly when no uncolored node can turn White in round 1.
:func:`zero_growth_placement` decides that with a small integer program,
which settles "optimum == w" versus "optimum > w" on instances far too large
for enumeration.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.optimize import Bounds, LinearConstraint, milp

from .diffusion import Color, SeedColoring, TieRule
from .errors import (
    EmptySetError,
    InstanceTooLargeError,
    InvalidParametersError,
    NotACliqueError,
)
from .graph import Graph, _as_node_array, build_graph, layers_from

EXACT_MAX_NODES = 20
EXACT_MAX_ROUNDS = 3


@dataclass(frozen=True)
class MIInstance:
    graph: Graph
    b: int
    w: int
    t: int

    def __post_init__(self):
        if min(self.b, self.w, self.t) < 0 or self.b + self.w > self.graph.n:
            raise InvalidParametersError("need b, w, t >= 0 and b + w <= n")

    def to_dict(self) -> dict:
        return {"n": self.graph.n, "b": self.b, "w": self.w, "t": self.t}


@dataclass(frozen=True)
class ReductionArtifacts:
    instance: MIInstance
    source: Graph
    k: int
    s: int
    source_edges: np.ndarray  # edge j of G' is source_edges[j]

    @property
    def n_source(self) -> int:
        return self.source.n

    @property
    def m_source(self) -> int:
        return int(self.source_edges.shape[0])

    def original(self, i: int) -> int:
        return i

    def partners_of_original(self, i: int) -> np.ndarray:
        start = self.n_source + i * self.s
        return np.arange(start, start + self.s)

    def edge_node(self, j: int) -> int:
        return self.n_source * (self.s + 1) + j

    def partners_of_edge(self, j: int) -> np.ndarray:
        start = self.n_source * (self.s + 1) + self.m_source + j * self.s
        return np.arange(start, start + self.s)

    def leaf(self, j: int) -> int:
        return self.n_source * (self.s + 1) + self.m_source * (self.s + 1) + j

    def role(self, v: int) -> tuple[str, int]:
        n1, m1, s = self.n_source, self.m_source, self.s
        if v < n1:
            return ("V_original", v)
        v -= n1
        if v < n1 * s:
            return ("V_gadget", v // s)
        v -= n1 * s
        if v < m1:
            return ("U_edge", v)
        v -= m1
        if v < m1 * s:
            return ("U_gadget", v // s)
        return ("Q_leaf", v - m1 * s)

    def roles(self) -> list[tuple[str, int]]:
        return [self.role(v) for v in range(self.instance.graph.n)]

    def role_map(self) -> dict:
        """JSON-ready role annotations grouped by tag."""
        out: dict[str, dict[str, list[int]]] = {}
        for v, (tag, idx) in enumerate(self.roles()):
            out.setdefault(tag, {}).setdefault(str(idx), []).append(v)
        return {"k": self.k, "s": self.s, "n_source": self.n_source, "m_source": self.m_source,
                "source_edges": self.source_edges.tolist(), "budgets": self.instance.to_dict(),
                "roles": out}


def _clique_edges(nodes: np.ndarray) -> np.ndarray:
    a, b = np.triu_indices(nodes.size, 1)
    return np.stack([nodes[a], nodes[b]], axis=1)


def build_mi_instance(g_prime: Graph, k: int, s: int) -> ReductionArtifacts:
    if not 1 <= k <= g_prime.n:
        raise InvalidParametersError(f"need 1 <= k <= n' = {g_prime.n}")
    if s < 1:
        raise InvalidParametersError("s must be >= 1")
    n1 = g_prime.n
    src_edges = g_prime.edges()
    m1 = src_edges.shape[0]
    n = n1 * (s + 1) + m1 * (s + 2)
    art = ReductionArtifacts(MIInstance(build_graph(n, []), k, math.comb(k, 2), 2), g_prime, k, s, src_edges)
    parts = []
    for i in range(n1):
        parts.append(_clique_edges(np.concatenate([[i], art.partners_of_original(i)])))
    for j, (a, b) in enumerate(src_edges.tolist()):
        u = art.edge_node(j)
        parts.append(np.array([[u, a], [u, b], [u, art.leaf(j)]]))
        parts.append(_clique_edges(np.concatenate([[u], art.partners_of_edge(j)])))
    g = build_graph(n, np.concatenate(parts) if parts else np.empty((0, 2), dtype=np.int64))
    inst = MIInstance(g, k, math.comb(k, 2), 2)
    return ReductionArtifacts(inst, g_prime, k, s, src_edges)


def clique_witness_coloring(art: ReductionArtifacts, clique) -> SeedColoring:
    """Black on the clique's original nodes, White on the leaves of its edges."""
    nodes = sorted(set(int(v) for v in clique))
    if len(nodes) != art.k:
        raise NotACliqueError(f"expected {art.k} nodes, got {len(nodes)}")
    for a, b in itertools.combinations(nodes, 2):
        if not art.source.has_edge(a, b):
            raise NotACliqueError(f"{a} and {b} are not adjacent")
    members = set(nodes)
    leaves = [art.leaf(j) for j, (a, b) in enumerate(art.source_edges.tolist())
              if a in members and b in members]
    return SeedColoring.from_sets([art.original(v) for v in nodes], leaves)


def find_clique(g: Graph, k: int) -> tuple[int, ...] | None:
    """Some k-clique of ``g`` by plain enumeration (tiny graphs only)."""
    for combo in itertools.combinations(range(g.n), k):
        if all(g.has_edge(a, b) for a, b in itertools.combinations(combo, 2)):
            return combo
    return None


# -- exact and sampled white counts -----------------------------------------

def _dense_int(g: Graph) -> np.ndarray:
    return g.to_dense().astype(np.int32)


def _initial(n: int, coloring: SeedColoring) -> np.ndarray:
    c = np.zeros(n, dtype=np.int8)
    c[coloring.nodes] = coloring.colors
    return c


def expected_white_exact(g: Graph, coloring: SeedColoring, t: int,
                         tie: TieRule = TieRule.FAIR_COIN, adj: np.ndarray | None = None) -> float:
    """``E[w_hat_t]`` by expanding every tie-coin outcome round by round.

    Identical intermediate states are merged; the last round is not expanded
    because a tying node there is White with probability exactly 1/2.
    """
    adj = _dense_int(g) if adj is None else adj
    start = _initial(g.n, coloring)
    if t == 0:
        return float((start == Color.WHITE).sum())
    tie_white = {TieRule.FAIR_COIN: 0.5, TieRule.ALWAYS_BLACK: 0.0, TieRule.ALWAYS_WHITE: 1.0}[tie]
    states = {start.tobytes(): (start, 1.0)}
    total = 0.0
    for r in range(1, t + 1):
        nxt: dict[bytes, tuple[np.ndarray, float]] = {}
        for c, p in states.values():
            bl = adj @ (c == Color.BLACK).astype(np.int32)
            wh = adj @ (c == Color.WHITE).astype(np.int32)
            cand = (c == Color.UNCOLORED) & (bl + wh > 0)
            if r == t:
                total += p * ((c == Color.WHITE).sum() + (cand & (wh > bl)).sum()
                              + tie_white * (cand & (wh == bl)).sum())
                continue
            base = c.copy()
            base[cand & (bl > wh)] = Color.BLACK
            base[cand & (wh > bl)] = Color.WHITE
            ties = np.flatnonzero(cand & (wh == bl))
            if tie is not TieRule.FAIR_COIN or ties.size == 0:
                if ties.size:
                    base[ties] = Color.BLACK if tie is TieRule.ALWAYS_BLACK else Color.WHITE
                outcomes = [(base, p)]
            else:
                q = p / 2 ** ties.size
                outcomes = []
                for bits in itertools.product((Color.BLACK, Color.WHITE), repeat=ties.size):
                    out = base.copy()
                    out[ties] = bits
                    outcomes.append((out, q))
            for out, q in outcomes:
                key = out.tobytes()
                if key in nxt:
                    nxt[key] = (nxt[key][0], nxt[key][1] + q)
                else:
                    nxt[key] = (out, q)
        states = nxt
    return float(total)


def sample_white_counts(g: Graph, coloring: SeedColoring, t: int, trials: int,
                        rng: np.random.Generator, tie: TieRule = TieRule.FAIR_COIN,
                        adj: np.ndarray | None = None) -> np.ndarray:
    """``w_hat_t`` of ``trials`` independent runs, simulated side by side."""
    adj = _dense_int(g) if adj is None else adj
    c = np.tile(_initial(g.n, coloring), (trials, 1))
    for _ in range(t):
        bl = (c == Color.BLACK).astype(np.int32) @ adj
        wh = (c == Color.WHITE).astype(np.int32) @ adj
        cand = (c == Color.UNCOLORED) & (bl + wh > 0)
        tied = cand & (bl == wh)
        new = c.copy()
        new[cand & (bl > wh)] = Color.BLACK
        new[cand & (wh > bl)] = Color.WHITE
        if tied.any():
            if tie is TieRule.FAIR_COIN:
                coins = rng.random(c.shape) < 0.5
                new[tied] = np.where(coins[tied], Color.BLACK, Color.WHITE)
            else:
                new[tied] = Color.BLACK if tie is TieRule.ALWAYS_BLACK else Color.WHITE
        c = new
    return (c == Color.WHITE).sum(axis=1)


@dataclass(frozen=True)
class MIResult:
    value: float
    coloring: SeedColoring
    mode: str
    placements: int
    std_error: float = 0.0

    def ci_half_width(self, z: float = 2.5758293035489004) -> float:
        return z * self.std_error

    def to_dict(self) -> dict:
        return {"value": self.value, "mode": self.mode, "placements": self.placements,
                "std_error": self.std_error, "black": self.coloring.black.tolist(),
                "white": self.coloring.white.tolist()}


def placement_count(inst: MIInstance) -> int:
    n = inst.graph.n
    return math.comb(n, inst.b) * math.comb(n - inst.b, inst.w)


def iter_placements(inst: MIInstance):
    """All (black, white) placements in lexicographic order."""
    n = inst.graph.n
    for black in itertools.combinations(range(n), inst.b):
        taken = set(black)
        rest = [v for v in range(n) if v not in taken]
        for white in itertools.combinations(rest, inst.w):
            yield black, white


def _score_range(args) -> tuple[float, int, float]:
    inst, mode, trials, seed, tie, lo, hi = args
    g = inst.graph
    adj = _dense_int(g)
    best = (math.inf, -1, 0.0)
    for i, (black, white) in enumerate(itertools.islice(iter_placements(inst), lo, hi), start=lo):
        col = SeedColoring.from_sets(black, white)
        if mode == "exact":
            val, se = expected_white_exact(g, col, inst.t, tie, adj), 0.0
        else:
            rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(i,)))
            sample = sample_white_counts(g, col, inst.t, trials, rng, tie, adj)
            val = float(sample.mean())
            se = float(sample.std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
        if val < best[0] - 1e-12:
            best = (val, i, se)
    return best


def first_zero_growth_index(inst: MIInstance, tie: TieRule = TieRule.FAIR_COIN,
                            limit: int | None = None, batch: int = 20_000) -> int | None:
    """Index (in :func:`iter_placements` order) of the first placement that
    creates no White node within ``t`` rounds on any tie outcome, or None.

    Seeds keep their color, so ``w_hat_t >= w`` always; such a placement
    therefore attains the optimum exactly.  The update is monotone in the
    neighbors' colors, so resolving every tie White yields the whitest
    outcome: the placement qualifies iff that single run stays at ``w``.
    """
    g = inst.graph
    adj = _dense_int(g)
    tie_color = Color.BLACK if tie is TieRule.ALWAYS_BLACK else Color.WHITE
    it = iter_placements(inst)
    done = 0
    while limit is None or done < limit:
        size = batch if limit is None else min(batch, limit - done)
        chunk = list(itertools.islice(it, size))
        if not chunk:
            return None
        k = len(chunk)
        c = np.zeros((k, g.n), dtype=np.int8)
        rows = np.arange(k)
        if inst.b:
            c[rows[:, None], np.array([blk for blk, _ in chunk])] = Color.BLACK
        if inst.w:
            c[rows[:, None], np.array([wht for _, wht in chunk])] = Color.WHITE
        for _ in range(inst.t):
            bl = (c == Color.BLACK).astype(np.int32) @ adj
            wh = (c == Color.WHITE).astype(np.int32) @ adj
            cand = (c == Color.UNCOLORED) & (bl + wh > 0)
            c[cand & (bl > wh)] = Color.BLACK
            c[cand & (wh > bl)] = Color.WHITE
            c[cand & (wh == bl)] = tie_color
        hits = np.flatnonzero((c == Color.WHITE).sum(axis=1) == inst.w)
        if hits.size:
            return done + int(hits[0])
        done += k
    return None


def mi_bruteforce(inst: MIInstance, mode: str = "exact", trials: int = 1000, seed: int = 0,
                  max_placements: int = 200_000, tie: TieRule = TieRule.FAIR_COIN,
                  jobs: int = 1) -> MIResult:
    """Global optimum over every placement.

    ``mode="exact"`` needs ``n <= 20`` and ``t <= 3``; ``mode="montecarlo"``
    scores placement ``i`` by the mean of ``trials`` runs drawn from
    ``SeedSequence(seed, spawn_key=(i,))``.  Ties between placements keep the
    lexicographically first one, so the result does not depend on ``jobs``.

    A cheap deterministic scan first looks for a placement attaining the
    lower bound ``w`` (see :func:`first_zero_growth_index`); if one exists it
    is the answer in either mode, with zero standard error.  That scan may
    cover up to ``100 * max_placements`` placements; the full evaluation is
    capped at ``max_placements``.
    """
    if mode not in ("exact", "montecarlo"):
        raise InvalidParametersError(f"unknown mode {mode!r}")
    g = inst.graph
    if mode == "exact" and (g.n > EXACT_MAX_NODES or inst.t > EXACT_MAX_ROUNDS):
        raise InstanceTooLargeError(f"exact expectation needs n <= {EXACT_MAX_NODES} and t <= {EXACT_MAX_ROUNDS}")
    count = placement_count(inst)
    if count == 0:
        raise InvalidParametersError("instance admits no placement")
    hit = first_zero_growth_index(inst, tie, limit=min(count, 100 * max_placements))
    if hit is not None:
        black, white = next(itertools.islice(iter_placements(inst), hit, None))
        return MIResult(float(inst.w), SeedColoring.from_sets(black, white), mode, count, 0.0)
    if count > max_placements:
        raise InstanceTooLargeError(f"{count} placements exceed the cap of {max_placements}")
    jobs = max(1, min(jobs, count))
    bounds = np.linspace(0, count, jobs + 1).astype(int)
    tasks = [(inst, mode, trials, seed, tie, int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:])]
    if jobs == 1:
        parts = [_score_range(tasks[0])]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            parts = list(pool.map(_score_range, tasks))
    # chunks are in placement order, so a strict comparison keeps the first optimum
    best = (math.inf, -1, 0.0)
    for part in parts:
        if part[1] >= 0 and part[0] < best[0] - 1e-12:
            best = part
    if best[1] < 0:
        raise InvalidParametersError("instance admits no placement")
    black, white = next(itertools.islice(iter_placements(inst), best[1], None))
    return MIResult(best[0], SeedColoring.from_sets(black, white), mode, count, best[2])


def _closed_twin_classes(g: Graph) -> list[list[int]]:
    classes: dict[tuple[int, ...], list[int]] = {}
    for v in range(g.n):
        key = tuple(sorted(g.neighbors(v).tolist() + [v]))
        classes.setdefault(key, []).append(v)
    return [c for c in classes.values() if len(c) > 1]


def zero_growth_placement(inst: MIInstance) -> SeedColoring | None:
    """A placement under which no White node is ever created, or None.

    Such a placement exists iff the MI optimum equals ``w`` (for ``t >= 1``):
    if round 1 creates no White, every later node only sees Black neighbors.
    Binary variables ``b_v, w_v``; for every uncolored node ``y`` next to a
    White ``x`` the Black neighbors of ``y`` must outnumber its White ones:
    ``sum_{z~y} (b_z - w_z) >= w_x - (deg(y)+1)(b_y + w_y)``.
    """
    g = inst.graph
    n = g.n
    rows, cols, vals, lo = [], [], [], []
    r = 0

    def add(entries, lower):
        nonlocal r
        for c, v in entries:
            rows.append(r)
            cols.append(c)
            vals.append(v)
        lo.append(lower)
        r += 1

    for y in range(n):
        nbrs = g.neighbors(y).tolist()
        big = len(nbrs) + 1
        base = [(z, 1.0) for z in nbrs] + [(n + z, -1.0) for z in nbrs]
        for x in nbrs:
            # coefficient of w_x is -1 from the sum and -1 from the right side
            entries = [(c, v) for c, v in base if c != n + x] + [(n + x, -2.0), (y, big), (n + y, big)]
            add(entries, 0.0)
    hi = [np.inf] * r
    for v in range(n):
        add([(v, 1.0), (n + v, 1.0)], -np.inf)
        hi.append(1.0)
    add([(v, 1.0) for v in range(n)], inst.b)
    hi.append(inst.b)
    add([(n + v, 1.0) for v in range(n)], inst.w)
    hi.append(inst.w)
    # Closed twins (same closed neighborhood) can be swapped by an automorphism,
    # so we may assume each twin class is ordered Black, then White, then
    # uncolored.  This prunes the gadget cliques' symmetric copies.
    for group in _closed_twin_classes(g):
        for a, b in zip(group[:-1], group[1:]):
            add([(a, 1.0), (b, -1.0)], 0.0)
            hi.append(np.inf)
            add([(a, 1.0), (n + a, 1.0), (b, -1.0), (n + b, -1.0)], 0.0)
            hi.append(np.inf)
    A = sparse.csr_matrix((vals, (rows, cols)), shape=(r, 2 * n))
    res = milp(c=np.zeros(2 * n), constraints=LinearConstraint(A, np.array(lo), np.array(hi)),
               integrality=np.ones(2 * n), bounds=Bounds(0, 1))
    if res.status == 2:  # infeasible
        return None
    if not res.success:
        raise InvalidParametersError(f"integer program failed: {res.message}")
    x = np.round(res.x).astype(int)
    return SeedColoring.from_sets(np.flatnonzero(x[:n]).tolist(), np.flatnonzero(x[n:]).tolist())


def thop_domset_check(g: Graph, S, t: int) -> bool:
    """True iff every node lies within distance ``t`` of ``S``."""
    src = _as_node_array(S, g.n)
    if src.size == 0:
        raise EmptySetError("node set is empty")
    if t < 0:
        raise InvalidParametersError("t must be >= 0")
    dec = layers_from(g, src)
    return dec.reached == g.n and dec.depth <= t
