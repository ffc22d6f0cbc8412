"""Synchronous majority-based coloring process.

Seeds start Black or White, everything else uncolored.  In each round every
uncolored node with at least one colored neighbor adopts the color held by
the majority of its colored neighbors, using colors as they stood at the end
of the previous round; a tie is resolved by a :class:`TieRule`.  Colored
nodes never change again.

Because colors never change, the nodes colored in round ``t`` are exactly the
BFS layer ``N_t(R_0)``, and their colored neighbors all sit in layer
``t - 1``.  The engine exploits this: each round only touches the previous
layer's adjacency, so a full run costs ``O(m)``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

from .errors import (
    DisconnectedError,
    EmptySeedSetError,
    NodeOutOfRangeError,
    RoundOutOfRangeError,
)
from .graph import Graph


class Color(enum.IntEnum):
    UNCOLORED = 0
    BLACK = 1
    WHITE = 2

    @classmethod
    def parse(cls, text: str) -> "Color":
        key = text.strip().upper()
        if key in ("B", "BLACK"):
            return cls.BLACK
        if key in ("W", "WHITE"):
            return cls.WHITE
        raise ValueError(f"unknown color {text!r}")

    @property
    def letter(self) -> str:
        return "UBW"[self.value]


class TieRule(enum.Enum):
    FAIR_COIN = "fair"
    ALWAYS_BLACK = "black"
    ALWAYS_WHITE = "white"


class WinMode(enum.Enum):
    COLORED_MAJORITY = "colored"
    POPULATION_MAJORITY = "population"


class SeedColoring:
    """Seed set ``R_0`` with one color per seed.

    Stored as two parallel arrays sorted by node id so the engine can scatter
    them straight into a color vector.
    """

    __slots__ = ("nodes", "colors")

    def __init__(self, nodes, colors):
        nodes = np.asarray(nodes, dtype=np.int64).ravel()
        colors = np.asarray(colors, dtype=np.int8).ravel()
        if nodes.size != colors.size:
            raise ValueError("nodes and colors differ in length")
        order = np.argsort(nodes, kind="stable")
        nodes, colors = nodes[order], colors[order]
        if nodes.size > 1 and (np.diff(nodes) == 0).any():
            raise ValueError("a seed was given more than one color")
        if not np.isin(colors, (Color.BLACK, Color.WHITE)).all():
            raise ValueError("seed colors must be Black or White")
        nodes.setflags(write=False)
        colors.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "colors", colors)

    def __setattr__(self, name, value):
        raise AttributeError("SeedColoring is immutable")

    def __getstate__(self):
        return (np.array(self.nodes), np.array(self.colors))

    def __setstate__(self, state):
        self.__init__(*state)

    @classmethod
    def from_sets(cls, black: Iterable[int] = (), white: Iterable[int] = ()) -> "SeedColoring":
        black, white = list(black), list(white)
        return cls(black + white, [Color.BLACK] * len(black) + [Color.WHITE] * len(white))

    @classmethod
    def from_mapping(cls, color_of: Mapping[int, Color | str]) -> "SeedColoring":
        items = [(int(v), c if isinstance(c, Color) else Color.parse(c)) for v, c in color_of.items()]
        return cls([v for v, _ in items], [int(c) for _, c in items])

    def __eq__(self, other) -> bool:
        if not isinstance(other, SeedColoring):
            return NotImplemented
        return np.array_equal(self.nodes, other.nodes) and np.array_equal(self.colors, other.colors)

    def __hash__(self) -> int:
        return hash((self.nodes.tobytes(), self.colors.tobytes()))

    def __len__(self) -> int:
        return int(self.nodes.size)

    def __repr__(self) -> str:
        return f"SeedColoring(black={self.black.tolist()}, white={self.white.tolist()})"

    @property
    def seeds(self) -> frozenset[int]:
        return frozenset(self.nodes.tolist())

    @property
    def color_of(self) -> dict[int, Color]:
        return {v: Color(c) for v, c in zip(self.nodes.tolist(), self.colors.tolist())}

    @property
    def black(self) -> np.ndarray:
        return self.nodes[self.colors == Color.BLACK]

    @property
    def white(self) -> np.ndarray:
        return self.nodes[self.colors == Color.WHITE]

    @property
    def b0(self) -> int:
        return int((self.colors == Color.BLACK).sum())

    @property
    def w0(self) -> int:
        return int((self.colors == Color.WHITE).sum())

    def check(self, g: Graph) -> None:
        if self.nodes.size and (self.nodes[0] < 0 or self.nodes[-1] >= g.n):
            bad = int(self.nodes[0]) if self.nodes[0] < 0 else int(self.nodes[-1])
            raise NodeOutOfRangeError(f"seed {bad} not in 0..{g.n - 1}")

    def to_lines(self) -> str:
        return "".join(f"{v} {Color(c).letter}\n" for v, c in zip(self.nodes.tolist(), self.colors.tolist()))


def parse_seed_lines(text: str) -> SeedColoring:
    """Parse the seeds file format: one ``node B|W`` per line, ``#`` comments."""
    mapping: dict[int, Color] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ValueError(f"line {lineno}: expected 'node B|W'")
        node = int(parts[0])
        if node in mapping:
            raise ValueError(f"line {lineno}: node {node} listed twice")
        mapping[node] = Color.parse(parts[1])
    return SeedColoring.from_mapping(mapping)


@dataclass
class DiffusionTrace:
    """Per-round bookkeeping of one run.

    ``black[t]``/``white[t]`` count the nodes colored in round ``t`` (round 0
    is the seeding).  ``stabilization_time`` is the last round in which a node
    got colored once nothing reachable is left uncolored, or ``None`` if the
    run stopped at its round cap first.  ``history[t]`` (opt-in) holds the
    ``(nodes, colors)`` arrays of round ``t``.
    """

    n: int
    black: list[int]
    white: list[int]
    stabilization_time: int | None
    final_colors: np.ndarray
    history: list[tuple[np.ndarray, np.ndarray]] | None = None
    ties: list[int] = field(default_factory=list)

    @property
    def rounds(self) -> int:
        return len(self.black) - 1

    @property
    def stable(self) -> bool:
        return self.stabilization_time is not None

    def r(self, t: int) -> int:
        return self.black[t] + self.white[t]

    def _cum(self, series: list[int], t: int) -> int:
        if t < 0:
            raise RoundOutOfRangeError(f"round {t} is negative")
        if t > self.rounds:
            if not self.stable:
                raise RoundOutOfRangeError(f"round {t} exceeds the {self.rounds} recorded rounds")
            t = self.rounds
        return int(sum(series[: t + 1]))

    def b_hat(self, t: int) -> int:
        return self._cum(self.black, t)

    def w_hat(self, t: int) -> int:
        return self._cum(self.white, t)

    def r_hat(self, t: int) -> int:
        return self.b_hat(t) + self.w_hat(t)

    def cumulative(self) -> tuple[np.ndarray, np.ndarray]:
        return np.cumsum(self.black), np.cumsum(self.white)

    def round_records(self) -> list[dict]:
        bh, wh = self.cumulative()
        return [{"round": t, "r": self.black[t] + self.white[t], "b": self.black[t], "w": self.white[t],
                 "r_hat": int(bh[t] + wh[t]), "b_hat": int(bh[t]), "w_hat": int(wh[t])}
                for t in range(self.rounds + 1)]

    @classmethod
    def empty(cls, n: int) -> "DiffusionTrace":
        """Trace of a run with no seeds: nothing ever gets colored."""
        stab = 0 if n == 0 else None
        return cls(n, [0], [0], stab, np.zeros(n, dtype=np.int8), None, [0])


DENSE_FRACTION = 4


def _indicator(n: int, nodes: np.ndarray) -> np.ndarray:
    out = np.zeros(n, dtype=np.float64)
    out[nodes] = 1.0
    return out


def run_diffusion(g: Graph, seed: SeedColoring, rounds: int | None = None,
                  tie: TieRule = TieRule.FAIR_COIN, rng: np.random.Generator | None = None,
                  record_history: bool = False, allow_empty: bool = False) -> DiffusionTrace:
    """Run the process for ``rounds`` rounds, or until stable when ``rounds`` is None.

    Under ``TieRule.FAIR_COIN`` each tying node of a round draws one uniform
    from ``rng``, in ascending node order; a draw below 1/2 means Black.
    """
    if len(seed) == 0:
        if allow_empty:
            return DiffusionTrace.empty(g.n)
        raise EmptySeedSetError("seed set is empty")
    seed.check(g)
    if rounds is not None and rounds < 0:
        raise RoundOutOfRangeError("rounds must be non-negative")
    color = np.zeros(g.n, dtype=np.int8)
    color[seed.nodes] = seed.colors
    black = [seed.b0]
    white = [seed.w0]
    ties = [0]
    history = [(seed.nodes, seed.colors)] if record_history else None
    layer = seed.nodes
    t = 0
    stabilization = None
    # Rounds touching a large share of the edges go through a whole-graph
    # sparse mat-vec instead of gathering neighbor lists; both paths give
    # the same candidates in the same ascending order.
    dense_work = g.indices.size // DENSE_FRACTION
    while True:
        if int(g.degrees[layer].sum()) > dense_work:
            hit = g.to_csr() @ _indicator(g.n, layer)
            cand = np.flatnonzero((hit > 0) & (color == Color.UNCOLORED))
        else:
            _, nb = g.gather(layer)
            cand = np.unique(nb[color[nb] == Color.UNCOLORED])
        if cand.size == 0:
            stabilization = t
            break
        if rounds is not None and t >= rounds:
            break
        t += 1
        k = cand.size
        if int(g.degrees[cand].sum()) > dense_work:
            csr = g.to_csr()
            nb_black = (csr @ (color == Color.BLACK).astype(np.float64))[cand].astype(np.int64)
            nb_white = (csr @ (color == Color.WHITE).astype(np.float64))[cand].astype(np.int64)
        else:
            seg, nbrs = g.gather(cand)
            c = color[nbrs]
            nb_black = np.bincount(seg[c == Color.BLACK], minlength=k)
            nb_white = np.bincount(seg[c == Color.WHITE], minlength=k)
        new = np.where(nb_black > nb_white, Color.BLACK, Color.WHITE).astype(np.int8)
        tied = nb_black == nb_white
        n_ties = int(tied.sum())
        if n_ties:
            if tie is TieRule.ALWAYS_BLACK:
                new[tied] = Color.BLACK
            elif tie is TieRule.ALWAYS_WHITE:
                new[tied] = Color.WHITE
            else:
                if rng is None:
                    rng = np.random.default_rng()
                coins = rng.random(n_ties) < 0.5
                new[tied] = np.where(coins, Color.BLACK, Color.WHITE)
        color[cand] = new
        nb_count = int((new == Color.BLACK).sum())
        black.append(nb_count)
        white.append(k - nb_count)
        ties.append(n_ties)
        if record_history:
            history.append((cand, new))
        layer = cand
    return DiffusionTrace(g.n, black, white, stabilization, color, history, ties)


def attacker_wins(trace: DiffusionTrace, t: int | None = None,
                  mode: WinMode = WinMode.COLORED_MAJORITY) -> bool:
    """Win test after ``t`` rounds (default: the last recorded round).

    ColoredMajority: Black holds at least as many colored nodes as White (an
    exact tie is a win).  PopulationMajority: more than half of all nodes are
    Black.
    """
    if t is None:
        t = trace.rounds
    b = trace.b_hat(t)
    if mode is WinMode.POPULATION_MAJORITY:
        return 2 * b > trace.n
    return b >= trace.w_hat(t)


def stabilization_time(trace: DiffusionTrace) -> int:
    """Smallest round after which every node is colored."""
    if trace.r_hat(trace.rounds) < trace.n:
        raise DisconnectedError(f"{trace.n - trace.r_hat(trace.rounds)} nodes were never colored")
    bh, wh = trace.cumulative()
    return int(np.argmax(bh + wh >= trace.n))


def win_margin(trace: DiffusionTrace, t: int | None = None) -> int:
    """``w_hat_t - b_hat_t``; positive means White leads."""
    if t is None:
        t = trace.rounds
    return trace.w_hat(t) - trace.b_hat(t)


def round_node_sets(trace: DiffusionTrace) -> list[np.ndarray]:
    if trace.history is None:
        raise ValueError("trace was recorded without history")
    return [nodes for nodes, _ in trace.history]

