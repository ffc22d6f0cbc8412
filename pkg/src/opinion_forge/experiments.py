"""Monte Carlo harness and closed-form threshold calculators.

Trial ``i`` of an experiment draws everything (seed placement, seed colors,
tie coins) from ``default_rng(SeedSequence(master_seed, spawn_key=(0, i)))``,
so results depend only on the config, never on scheduling or ``jobs``.
Random graph families are drawn once per experiment from spawn key ``(1,)``
unless the config pins a ``graph_seed``.
"""

from __future__ import annotations

import json
import math
import os
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from scipy import stats

from .attackers import AttackerKind, AttackerSpec, Strategy, draw_seed
from .diffusion import TieRule, WinMode, attacker_wins, run_diffusion
from .errors import DisconnectedError, InvalidParametersError, InvalidSpecError
from .generators import (
    CounterexampleSpec,
    FamilySpec,
    generate,
    generate_counterexample,
)
from .graph import Graph, eccentricity_of_set, layers_from, read_edge_list

TRIAL_KEY = 0
GRAPH_KEY = 1


def trial_rng(master_seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(master_seed, spawn_key=(TRIAL_KEY, index)))


def graph_rng(master_seed: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(master_seed, spawn_key=(GRAPH_KEY,)))


def clopper_pearson(successes: int, trials: int, level: float = 0.99) -> tuple[float, float]:
    """Exact two-sided binomial interval."""
    if trials < 1 or not 0 <= successes <= trials:
        raise InvalidParametersError("need 0 <= successes <= trials and trials >= 1")
    if not 0 < level < 1:
        raise InvalidParametersError("level must lie in (0, 1)")
    a = 1 - level
    lo = 0.0 if successes == 0 else float(stats.beta.ppf(a / 2, successes, trials - successes + 1))
    hi = 1.0 if successes == trials else float(stats.beta.ppf(1 - a / 2, successes + 1, trials - successes))
    return lo, hi


# -- configuration -----------------------------------------------------------

@dataclass(frozen=True)
class GraphSource:
    """Exactly one of an edge-list path, a family spec or a counterexample spec."""

    file: str | None = None
    family: FamilySpec | None = None
    counterexample: CounterexampleSpec | None = None
    graph_seed: int | None = None

    def __post_init__(self):
        given = sum(x is not None for x in (self.file, self.family, self.counterexample))
        if given != 1:
            raise InvalidSpecError("graph source needs exactly one of file/family/counterexample")

    def to_dict(self) -> dict:
        out: dict[str, Any] = {}
        if self.file is not None:
            out["file"] = self.file
        if self.family is not None:
            out["family"] = self.family.to_dict()
        if self.counterexample is not None:
            out["counterexample"] = self.counterexample.to_dict()
        if self.graph_seed is not None:
            out["graph_seed"] = self.graph_seed
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "GraphSource":
        return cls(
            file=data.get("file"),
            family=FamilySpec.from_dict(data["family"]) if "family" in data else None,
            counterexample=CounterexampleSpec.from_dict(data["counterexample"]) if "counterexample" in data else None,
            graph_seed=data.get("graph_seed"),
        )

    def load(self, master_seed: int) -> tuple[Graph, list[int] | None]:
        """The graph plus the construction's seed hint, if it has one."""
        if self.file is not None:
            return read_edge_list(self.file), None
        rng = np.random.default_rng(self.graph_seed) if self.graph_seed is not None else graph_rng(master_seed)
        if self.family is not None:
            return generate(self.family, rng), None
        cx = generate_counterexample(self.counterexample, rng)
        return cx.graph, cx.seed_hint


@dataclass(frozen=True)
class ExperimentConfig:
    graph: GraphSource
    attacker: AttackerSpec
    trials: int
    master_seed: int
    rounds: int | None = None  # None runs until stable
    tie: TieRule = TieRule.FAIR_COIN
    win_mode: WinMode = WinMode.COLORED_MAJORITY
    ci_level: float = 0.99

    def __post_init__(self):
        object.__setattr__(self, "tie", TieRule(self.tie))
        object.__setattr__(self, "win_mode", WinMode(self.win_mode))
        if self.trials < 1:
            raise InvalidSpecError("trials must be >= 1")
        if self.rounds is not None and self.rounds < 0:
            raise InvalidSpecError("rounds must be >= 0")

    def to_dict(self) -> dict:
        return {"graph": self.graph.to_dict(), "attacker": self.attacker.to_dict(),
                "trials": self.trials, "master_seed": self.master_seed,
                "rounds": "stable" if self.rounds is None else self.rounds,
                "tie": self.tie.value, "win_mode": self.win_mode.value, "ci_level": self.ci_level}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        rounds = data.get("rounds", "stable")
        return cls(
            graph=GraphSource.from_dict(data["graph"]),
            attacker=AttackerSpec.from_dict(data["attacker"]),
            trials=int(data["trials"]),
            master_seed=int(data["master_seed"]),
            rounds=None if rounds in (None, "stable") else int(rounds),
            tie=data.get("tie", "fair"),
            win_mode=data.get("win_mode", "colored"),
            ci_level=float(data.get("ci_level", 0.99)),
        )

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        return cls.from_dict(json.loads(text))


# -- trials ------------------------------------------------------------------

@dataclass(frozen=True)
class TrialRecord:
    trial: int
    win: bool
    b_hat: int
    w_hat: int
    stabilization: int | None

    def to_dict(self) -> dict:
        return {"trial": self.trial, "win": self.win, "b_hat": self.b_hat,
                "w_hat": self.w_hat, "stabilization": self.stabilization}


@dataclass
class TrialStats:
    trials: int
    wins: int
    win_rate: float
    ci_low: float
    ci_high: float
    ci_level: float
    stabilization_histogram: dict[int, int]
    unstabilized: int
    mean_b_hat: float
    mean_w_hat: float
    records: list[TrialRecord] | None = field(default=None, compare=False)

    @property
    def ci_half_width(self) -> float:
        return (self.ci_high - self.ci_low) / 2

    def to_dict(self) -> dict:
        return {"trials": self.trials, "wins": self.wins, "win_rate": self.win_rate,
                "ci_low": self.ci_low, "ci_high": self.ci_high, "ci_level": self.ci_level,
                "stabilization_histogram": {str(k): v for k, v in sorted(self.stabilization_histogram.items())},
                "unstabilized": self.unstabilized,
                "mean_b_hat": self.mean_b_hat, "mean_w_hat": self.mean_w_hat}


def _resolve_attacker(spec: AttackerSpec, hint: list[int] | None) -> AttackerSpec:
    if spec.strategy is Strategy.EXPLICIT and spec.explicit_seed_hint is None:
        if hint is None:
            raise InvalidParametersError("explicit strategy needs a seed hint and the graph source has none")
        return AttackerSpec(spec.kind, spec.alpha, spec.epsilon, spec.strategy, tuple(hint))
    return spec


def run_single(g: Graph, attacker: AttackerSpec, index: int, master_seed: int, rounds: int | None,
               tie: TieRule, win_mode: WinMode) -> TrialRecord:
    rng = trial_rng(master_seed, index)
    seed = draw_seed(g, attacker, rng)
    trace = run_diffusion(g, seed, rounds=rounds, tie=tie, rng=rng, allow_empty=True)
    t = trace.rounds if rounds is None or len(seed) == 0 else rounds
    b, w = trace.b_hat(t), trace.w_hat(t)
    win = attacker_wins(trace, t, win_mode)
    complete = trace.stable and sum(trace.black) + sum(trace.white) == g.n
    return TrialRecord(index, bool(win), b, w, trace.stabilization_time if complete else None)


def _run_chunk(args) -> list[TrialRecord]:
    g, attacker, indices, master_seed, rounds, tie, win_mode = args
    return [run_single(g, attacker, i, master_seed, rounds, tie, win_mode) for i in indices]


def resolve_jobs(jobs: int | None) -> int:
    if jobs is None:
        jobs = int(os.environ.get("OPINION_FORGE_JOBS", "1") or 1)
    return max(1, jobs)


def _map_trials(worker, payload_for, trials: int, jobs: int):
    if jobs == 1 or trials < 2 * jobs:
        return worker(payload_for(range(trials)))
    bounds = np.linspace(0, trials, jobs * 4 + 1).astype(int)
    chunks = [range(a, b) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]
    out = []
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        for part in pool.map(worker, [payload_for(c) for c in chunks]):
            out.extend(part)
    return out


def aggregate(records: list[TrialRecord], ci_level: float, keep_records: bool = False) -> TrialStats:
    trials = len(records)
    wins = sum(r.win for r in records)
    lo, hi = clopper_pearson(wins, trials, ci_level)
    hist = Counter(r.stabilization for r in records if r.stabilization is not None)
    unstab = sum(r.stabilization is None for r in records)
    return TrialStats(
        trials=trials, wins=wins, win_rate=wins / trials, ci_low=lo, ci_high=hi, ci_level=ci_level,
        stabilization_histogram=dict(sorted(hist.items())), unstabilized=unstab,
        mean_b_hat=float(np.mean([r.b_hat for r in records])),
        mean_w_hat=float(np.mean([r.w_hat for r in records])),
        records=records if keep_records else None,
    )


def run_trials(cfg: ExperimentConfig, jobs: int | None = None, keep_records: bool = False) -> TrialStats:
    """Run ``cfg.trials`` independent trials; identical for every ``jobs`` value."""
    g, hint = cfg.graph.load(cfg.master_seed)
    attacker = _resolve_attacker(cfg.attacker, hint)
    if attacker.kind is not AttackerKind.WEAK:
        attacker.validate()
    jobs = resolve_jobs(jobs)

    def payload(indices):
        return (g, attacker, indices, cfg.master_seed, cfg.rounds, cfg.tie, cfg.win_mode)

    records = _map_trials(_run_chunk, payload, cfg.trials, jobs)
    return aggregate(records, cfg.ci_level, keep_records)


# -- thresholds --------------------------------------------------------------

@dataclass(frozen=True)
class ThresholdReport:
    """Closed-form bounds; constants C, C', C'' are inputs, not proven values."""

    thm3_delta_bound: float
    prop2_delta_bound: float
    thm4_delta_bound: float
    d_star_1: float
    d_star_2: float
    d_star_3: float
    t_star_1: float
    t_star_2: float
    t_star_3: float
    t_star_4: float
    t_star_5: float
    constants: dict[str, float]
    inputs: dict[str, float]

    def to_dict(self) -> dict:
        out = {k: getattr(self, k) for k in (
            "thm3_delta_bound", "prop2_delta_bound", "thm4_delta_bound", "d_star_1", "d_star_2",
            "d_star_3", "t_star_1", "t_star_2", "t_star_3", "t_star_4", "t_star_5")}
        out["constants"] = dict(self.constants)
        out["constants_note"] = "unproven at these values; the bounds hold for some sufficiently small constants"
        out["inputs"] = dict(self.inputs)
        return out


def compute_thresholds(n: int, alpha: float, epsilon: float, mu: float, t: int, delta: int,
                       Delta: int, d: int | None = None, C: float = 1.0, C_prime: float = 1.0,
                       C_dprime: float = 1.0) -> ThresholdReport:
    """Evaluate every bound literally.

    ``delta``/``Delta`` are the minimum/maximum degree, ``d`` the tree arity
    used by ``t_star_5`` (defaults to ``Delta``).  Logs are natural except in
    ``t_star_3`` and ``t_star_4``, which use base 2 inside.
    """
    d = Delta if d is None else d
    if n < 2:
        raise InvalidParametersError("n must be >= 2")
    if not (0 < alpha < 0.5 and 0 < epsilon < 0.5):
        raise InvalidParametersError("alpha and epsilon must lie in (0, 1/2)")
    if not (1 / math.sqrt(n) < mu < 1):
        raise InvalidParametersError(f"mu must lie in (1/sqrt(n), 1) = ({1 / math.sqrt(n):.4g}, 1)")
    if t < 1 or delta < 1 or Delta < 2 or d < 2 or delta > Delta:
        raise InvalidParametersError("need t >= 1, 1 <= delta <= Delta, Delta >= 2, d >= 2")
    if min(C, C_prime, C_dprime) <= 0:
        raise InvalidParametersError("constants must be positive")
    ln = math.log
    log2n = math.log2(n)
    return ThresholdReport(
        thm3_delta_bound=(C * n / ln(1 / mu)) ** (1 / (2 * t)),
        prop2_delta_bound=C_dprime * n / ln(1 / mu) ** 2,
        thm4_delta_bound=C * n / (ln(n) ** C_prime * ln(4 / mu)),
        d_star_1=6 / (alpha * epsilon ** 2) * ln(12 / (alpha * epsilon * mu)),
        d_star_2=8 * ln(n) / (alpha * epsilon ** 2),
        d_star_3=4 * ln(6 / mu) / epsilon ** 2,
        t_star_1=2 / alpha * ln(4 / (alpha * epsilon)),
        t_star_2=6 / (alpha * delta) * ln(n) + 1,
        t_star_3=log2n / (16 * alpha * delta) - 1,
        t_star_4=ln(log2n / (16 * alpha)) / ln(Delta),
        t_star_5=ln(2 / alpha * ln(n)) / ln(d) + 1,
        constants={"C": C, "C_prime": C_prime, "C_dprime": C_dprime},
        inputs={"n": n, "alpha": alpha, "epsilon": epsilon, "mu": mu, "t": t,
                "delta": delta, "Delta": Delta, "d": d},
    )


def t_star_2(n: int, alpha: float, min_degree: int) -> float:
    return 6 / (alpha * min_degree) * math.log(n) + 1


def t_star_4(n: int, alpha: float, max_degree: int) -> float:
    return math.log(math.log2(n) / (16 * alpha)) / math.log(max_degree)


def t_star_5(n: int, alpha: float, arity: int) -> float:
    return math.log(2 / alpha * math.log(n)) / math.log(arity) + 1


# -- stabilization -----------------------------------------------------------

@dataclass
class StabilizationReport:
    trials: int
    alpha: float
    times: list[int]
    empty_seed_trials: int
    t_star_2: float
    t_star_4: float
    t_star_5: float | None
    quantiles: dict[str, float]

    def fraction_at_most(self, bound: float) -> float:
        return sum(x <= bound for x in self.times) / self.trials

    def to_dict(self) -> dict:
        return {"trials": self.trials, "alpha": self.alpha, "empty_seed_trials": self.empty_seed_trials,
                "t_star_2": self.t_star_2, "t_star_4": self.t_star_4, "t_star_5": self.t_star_5,
                "quantiles": self.quantiles,
                "fraction_le_t_star_2": self.fraction_at_most(self.t_star_2),
                "fraction_le_2_t_star_5": None if self.t_star_5 is None else self.fraction_at_most(2 * self.t_star_5),
                "histogram": {str(k): v for k, v in sorted(Counter(self.times).items())}}


def _stab_chunk(args) -> list[int | None]:
    g, alpha, indices, master_seed = args
    out = []
    for i in indices:
        rng = trial_rng(master_seed, i)
        seeds = np.flatnonzero(rng.random(g.n) < alpha)
        # the round-t colored set is the t-th BFS layer of the seeds, so the
        # stabilization time is the seeds' eccentricity
        out.append(None if seeds.size == 0 else eccentricity_of_set(g, seeds))
    return out


def stabilization_bound_check(g: Graph, alpha: float, trials: int, master_seed: int,
                              arity: int | None = None, jobs: int | None = None) -> StabilizationReport:
    """Stabilization times under Bernoulli(alpha) seeding next to the upper bound
    t_star_2 (minimum degree), the lower bound t_star_4 (maximum degree) and, when
    ``arity`` is given, the tree bound t_star_5.

    Trials without any seed are counted in ``empty_seed_trials`` and excluded
    from ``times``.
    """
    if not 0 < alpha <= 1:
        raise InvalidParametersError("alpha must lie in (0, 1]")
    if trials < 1:
        raise InvalidParametersError("trials must be >= 1")
    if g.n == 0 or layers_from(g, [0]).reached != g.n:
        raise DisconnectedError("stabilization analysis needs a connected graph")
    res = _map_trials(_stab_chunk, lambda idx: (g, alpha, idx, master_seed), trials, resolve_jobs(jobs))
    times = [x for x in res if x is not None]
    n = g.n
    t2 = t_star_2(n, alpha, g.min_degree) if g.min_degree > 0 else math.inf
    t4 = t_star_4(n, alpha, g.max_degree) if g.max_degree > 1 else math.nan
    t5 = None if arity is None else t_star_5(n, alpha, arity)
    arr = np.asarray(times if times else [0])
    quantiles = {"median": float(np.quantile(arr, 0.5)), "q90": float(np.quantile(arr, 0.9)),
                 "q99": float(np.quantile(arr, 0.99)), "max": float(arr.max()), "min": float(arr.min())}
    return StabilizationReport(trials, alpha, times, trials - len(times), t2, t4, t5, quantiles)
