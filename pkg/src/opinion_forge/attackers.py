"""Seed placement for the three attacker models.

* strong: picks ``round(alpha*n)`` seeds and colors exactly
  ``round((1/2+eps)*|R0|)`` of them White, the rest Black;
* moderate: picks the seeds, each seed is White independently w.p. 1/2+eps;
* weak: every node is a seed w.p. alpha, every seed White w.p. 1/2+eps.

Strong and moderate attackers choose *where* the seeds go through a strategy.
An explicit hint lists the seeds verbatim; for the strong attacker its first
``w0`` entries are the White seeds.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import csgraph

from .diffusion import SeedColoring
from .errors import HintSizeMismatchError, InvalidParametersError, StrategyInapplicableError
from .generators import round_half_up
from .graph import Graph, layers_from


class AttackerKind(enum.Enum):
    STRONG = "strong"
    MODERATE = "moderate"
    WEAK = "weak"


class Strategy(enum.Enum):
    EXPLICIT = "explicit"
    DEGREE_GREEDY_BLACK = "degree_greedy_black"
    COMPONENT_SPLIT = "component_split"
    CLUSTERED_WHITE = "clustered_white"
    DEGREE_GREEDY = "degree_greedy"
    RANDOM = "random"


STRONG_STRATEGIES = (Strategy.EXPLICIT, Strategy.DEGREE_GREEDY_BLACK, Strategy.COMPONENT_SPLIT,
                     Strategy.CLUSTERED_WHITE, Strategy.RANDOM)
MODERATE_STRATEGIES = (Strategy.EXPLICIT, Strategy.DEGREE_GREEDY, Strategy.RANDOM)
_DEFAULT = {AttackerKind.STRONG: Strategy.DEGREE_GREEDY_BLACK, AttackerKind.MODERATE: Strategy.RANDOM}


@dataclass(frozen=True)
class AttackerSpec:
    kind: AttackerKind
    alpha: float
    epsilon: float
    strategy: Strategy | None = None
    explicit_seed_hint: tuple[int, ...] | None = field(default=None)

    def __post_init__(self):
        object.__setattr__(self, "kind", AttackerKind(self.kind))
        strategy = self.strategy
        if strategy is None and self.kind in _DEFAULT:
            strategy = Strategy.EXPLICIT if self.explicit_seed_hint is not None else _DEFAULT[self.kind]
        object.__setattr__(self, "strategy", None if strategy is None else Strategy(strategy))
        if self.explicit_seed_hint is not None:
            object.__setattr__(self, "explicit_seed_hint", tuple(int(v) for v in self.explicit_seed_hint))

    def validate(self) -> None:
        if not (0 < self.alpha < 0.5 and 0 < self.epsilon < 0.5):
            raise InvalidParametersError("alpha and epsilon must lie in (0, 1/2)")
        if self.kind is AttackerKind.WEAK and self.strategy is not None:
            raise InvalidParametersError("the weak attacker has no strategy")
        allowed = STRONG_STRATEGIES if self.kind is AttackerKind.STRONG else MODERATE_STRATEGIES
        if self.kind is not AttackerKind.WEAK and self.strategy not in allowed:
            raise InvalidParametersError(f"{self.strategy.value} is not a {self.kind.value} strategy")
        if self.strategy is Strategy.EXPLICIT and self.explicit_seed_hint is None:
            raise InvalidParametersError("explicit strategy needs a seed hint")

    def to_dict(self) -> dict:
        out = {"kind": self.kind.value, "alpha": self.alpha, "epsilon": self.epsilon}
        if self.strategy is not None:
            out["strategy"] = self.strategy.value
        if self.explicit_seed_hint is not None:
            out["explicit_seed_hint"] = list(self.explicit_seed_hint)
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "AttackerSpec":
        hint = data.get("explicit_seed_hint")
        return cls(data["kind"], float(data["alpha"]), float(data["epsilon"]),
                   data.get("strategy"), None if hint is None else tuple(hint))


def seed_count(n: int, alpha: float) -> int:
    return round_half_up(alpha * n)


def white_count(r0: int, epsilon: float) -> int:
    return round_half_up((0.5 + epsilon) * r0)


def _by_degree(g: Graph) -> np.ndarray:
    # highest degree first, lower id breaks ties
    return np.lexsort((np.arange(g.n), -g.degrees))


def _hint(g: Graph, spec: AttackerSpec, size: int) -> np.ndarray:
    hint = np.asarray(spec.explicit_seed_hint, dtype=np.int64)
    if hint.size != size:
        raise HintSizeMismatchError(f"hint lists {hint.size} seeds, attacker places {size}")
    if np.unique(hint).size != hint.size:
        raise HintSizeMismatchError("hint repeats a node")
    if hint.size and (hint.min() < 0 or hint.max() >= g.n):
        raise HintSizeMismatchError("hint names a node outside the graph")
    return hint


def _component_split(g: Graph, white: int, black: int) -> SeedColoring:
    ncomp, label = csgraph.connected_components(g.to_csr(), directed=False)
    if ncomp < 2:
        raise StrategyInapplicableError("component split needs a disconnected graph")
    sizes = np.bincount(label, minlength=ncomp)
    fits = np.flatnonzero(sizes >= white)
    if fits.size == 0:
        raise StrategyInapplicableError(f"no component holds {white} White seeds")
    # the tightest fit leaves the fewest uncolored nodes next to White
    wc = int(fits[np.argmin(sizes[fits])])
    whites = np.flatnonzero(label == wc)[:white]
    others = [c for c in np.argsort(-sizes, kind="stable").tolist() if c != wc]
    pool = np.concatenate([np.flatnonzero(label == c) for c in others])
    if pool.size < black:
        raise StrategyInapplicableError("not enough nodes outside the White component")
    return SeedColoring.from_sets(pool[:black].tolist(), whites.tolist())


def _clustered_white(g: Graph, white: int, black: int, rng: np.random.Generator) -> SeedColoring:
    # Whites packed into one BFS ball so their neighborhoods overlap; Blacks
    # then go where they reach the most nodes that White does not touch.
    start = int(rng.integers(g.n))
    order = np.concatenate(layers_from(g, [start]).layers)
    if order.size < white:
        rest = np.setdiff1d(np.arange(g.n), order)
        order = np.concatenate([order, rest])
    whites = order[:white]
    near_white = np.zeros(g.n, dtype=bool)
    near_white[whites] = True
    _, nb = g.gather(whites)
    near_white[nb] = True
    seg, nb = g.gather(np.arange(g.n))
    score = np.bincount(seg[~near_white[nb]], minlength=g.n).astype(np.float64)
    score[whites] = -np.inf
    cand = np.lexsort((np.arange(g.n), -score))
    return SeedColoring.from_sets(cand[:black].tolist(), whites.tolist())


def strong_seed(g: Graph, spec: AttackerSpec, rng: np.random.Generator | None = None) -> SeedColoring:
    spec.validate()
    r0 = seed_count(g.n, spec.alpha)
    if int(np.floor(spec.alpha * g.n)) < 1:
        raise InvalidParametersError("alpha*n < 1: the attacker places no seed")
    white = white_count(r0, spec.epsilon)
    black = r0 - white
    s = spec.strategy
    if s is Strategy.EXPLICIT:
        hint = _hint(g, spec, r0)
        return SeedColoring.from_sets(hint[white:].tolist(), hint[:white].tolist())
    if s is Strategy.DEGREE_GREEDY_BLACK:
        top = _by_degree(g)[:r0]
        return SeedColoring.from_sets(top[:black].tolist(), top[black:].tolist())
    if s is Strategy.COMPONENT_SPLIT:
        return _component_split(g, white, black)
    rng = np.random.default_rng() if rng is None else rng
    if s is Strategy.CLUSTERED_WHITE:
        return _clustered_white(g, white, black, rng)
    picked = rng.choice(g.n, size=r0, replace=False)
    return SeedColoring.from_sets(picked[white:].tolist(), picked[:white].tolist())


def _coin_colors(nodes: np.ndarray, epsilon: float, rng: np.random.Generator) -> SeedColoring:
    is_white = rng.random(nodes.size) < 0.5 + epsilon
    return SeedColoring(nodes, np.where(is_white, 2, 1))


def moderate_seed(g: Graph, spec: AttackerSpec, rng: np.random.Generator | None = None) -> SeedColoring:
    spec.validate()
    rng = np.random.default_rng() if rng is None else rng
    r0 = seed_count(g.n, spec.alpha)
    s = spec.strategy
    if s is Strategy.EXPLICIT:
        nodes = _hint(g, spec, r0)
    elif s is Strategy.DEGREE_GREEDY:
        nodes = _by_degree(g)[:r0]
    else:
        nodes = rng.choice(g.n, size=r0, replace=False)
    return _coin_colors(np.asarray(nodes, dtype=np.int64), spec.epsilon, rng)


def weak_seed(g: Graph, spec: AttackerSpec, rng: np.random.Generator | None = None) -> SeedColoring:
    """Bernoulli(alpha) seeds; alpha may be anywhere in [0, 1] here."""
    if not (0 <= spec.alpha <= 1 and 0 <= spec.epsilon <= 0.5):
        raise InvalidParametersError("weak attacker needs alpha in [0, 1] and epsilon in [0, 1/2]")
    rng = np.random.default_rng() if rng is None else rng
    nodes = np.flatnonzero(rng.random(g.n) < spec.alpha)
    return _coin_colors(nodes, spec.epsilon, rng)


def draw_seed(g: Graph, spec: AttackerSpec, rng: np.random.Generator | None = None) -> SeedColoring:
    if spec.kind is AttackerKind.STRONG:
        return strong_seed(g, spec, rng)
    if spec.kind is AttackerKind.MODERATE:
        return moderate_seed(g, spec, rng)
    return weak_seed(g, spec, rng)
