"""Command-line front end: ``opinion-forge <subcommand> ...``.

Every subcommand first resolves its flags into a JSON-ready config (with the
master seed filled in), then runs from that config alone.  The config is
embedded in each output's provenance block, which is what ``replay`` reads
to regenerate an artifact byte for byte.

Exit codes: 0 success, 1 domain or input error (JSON record on stderr),
2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import os
import secrets
import sys
import tempfile
from typing import Callable

import numpy as np

from . import __version__
from .diffusion import (
    DiffusionTrace,
    TieRule,
    WinMode,
    attacker_wins,
    parse_seed_lines,
    run_diffusion,
)
from .errors import ConfigError, GraphLoadError, OpinionForgeError, ReplayError, SeedLoadError
from .experiments import (
    ExperimentConfig,
    compute_thresholds,
    graph_rng,
    resolve_jobs,
    run_trials,
    stabilization_bound_check,
)
from .generators import (
    COUNTEREXAMPLES,
    FAMILIES,
    CounterexampleSpec,
    FamilySpec,
    generate,
    generate_counterexample,
)
from .graph import format_edge_list, graph_stats, read_edge_list
from .reduction import (
    MIInstance,
    build_mi_instance,
    mi_bruteforce,
    zero_growth_placement,
)
from .spectral import certify_strong_resilience, compute_sigma

TOOL = "opinion-forge"
PROVENANCE_PREFIX = "provenance "


def _dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _digest(path: str) -> str:
    try:
        with open(path, "rb") as fh:
            return hashlib.sha256(fh.read()).hexdigest()
    except OSError as exc:
        raise GraphLoadError(f"cannot read {path}: {exc}") from exc


def _fresh_seed() -> int:
    return secrets.randbits(64)


class Outputs:
    """Where a run writes: the primary artifact plus optional side files."""

    def __init__(self, primary: str | None = None, **extra: str | None):
        self.primary = primary
        self.extra = {k: v for k, v in extra.items() if v}

    def write(self, name: str, text: str) -> None:
        path = self.extra.get(name)
        if path:
            with open(path, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)


def provenance(subcommand: str, config: dict) -> dict:
    inputs = {p: _digest(p) for p in _input_paths(config)}
    return {"tool": TOOL, "version": __version__, "subcommand": subcommand, "config": config,
            "master_seed": config.get("master_seed"), "inputs_sha256": inputs}


def _input_paths(config: dict) -> list[str]:
    paths = [config[k] for k in ("graph", "seeds") if isinstance(config.get(k), str)]
    exp = config.get("experiment")
    if exp and "file" in exp["graph"]:
        paths.append(exp["graph"]["file"])
    return paths


# -- generate ----------------------------------------------------------------

def _add_generate(p: argparse.ArgumentParser) -> None:
    kind = p.add_mutually_exclusive_group(required=True)
    kind.add_argument("--family", choices=FAMILIES)
    kind.add_argument("--counterexample", choices=COUNTEREXAMPLES)
    p.add_argument("--n", type=int)
    p.add_argument("--delta", type=int)
    p.add_argument("--depth", type=int)
    p.add_argument("--d", type=int)
    p.add_argument("--sizes", type=int, nargs="+")
    p.add_argument("--p", type=float)
    p.add_argument("--max-retries", type=int, default=1000)
    p.add_argument("--alpha", type=float)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--mu", type=float)
    p.add_argument("--t", type=int)
    p.add_argument("--s", type=int)
    p.add_argument("--master-seed", type=int)
    p.add_argument("--out", help="edge-list file (default: stdout)")
    p.add_argument("--sidecar", help="JSON file with role annotations and seed hints")


def _resolve_generate(a) -> dict:
    if a.family:
        spec = FamilySpec(a.family, n=a.n, delta=a.delta, depth=a.depth, d=a.d,
                          sizes=tuple(a.sizes or ()), p=a.p, max_retries=a.max_retries)
        cfg = {"family": spec.to_dict()}
    else:
        spec = CounterexampleSpec(a.counterexample, n=a.n, d=a.d, alpha=a.alpha, epsilon=a.epsilon,
                                  mu=a.mu, t=a.t, s=a.s)
        cfg = {"counterexample": spec.to_dict()}
    cfg["master_seed"] = _fresh_seed() if a.master_seed is None else a.master_seed
    return cfg


def _exec_generate(cfg: dict, out: Outputs) -> str:
    rng = graph_rng(cfg["master_seed"])
    prov = provenance("generate", cfg)
    if "family" in cfg:
        spec = FamilySpec.from_dict(cfg["family"])
        g = generate(spec, rng)
        side = {"kind": spec.family, "spec": spec.to_dict(), "n": g.n, "m": g.m}
    else:
        cx = generate_counterexample(CounterexampleSpec.from_dict(cfg["counterexample"]), rng)
        g = cx.graph
        side = cx.sidecar()
    side["provenance"] = prov
    out.write("sidecar", _dumps(side))
    return format_edge_list(g, [PROVENANCE_PREFIX + json.dumps(prov, sort_keys=True)])


# -- spectral ----------------------------------------------------------------

def _add_spectral(p):
    p.add_argument("--graph", required=True)
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--method", choices=["dense_eigensolve", "power_iteration_deflation"])
    p.add_argument("--alpha", type=float, help="with --epsilon, also issue a resilience certificate")
    p.add_argument("--epsilon", type=float)
    p.add_argument("--out")


def _resolve_spectral(a) -> dict:
    if (a.alpha is None) != (a.epsilon is None):
        raise ConfigError("--alpha and --epsilon go together")
    return {"graph": a.graph, "tol": a.tol, "method": a.method, "alpha": a.alpha, "epsilon": a.epsilon}


def _exec_spectral(cfg: dict, out: Outputs) -> str:
    g = read_edge_list(cfg["graph"])
    rep = compute_sigma(g, tol=cfg["tol"], method=cfg["method"])
    res = rep.to_dict()
    if cfg["alpha"] is not None:
        res["certificate"] = certify_strong_resilience(g, cfg["alpha"], cfg["epsilon"], rep).to_dict()
    res["provenance"] = provenance("spectral", cfg)
    return _dumps(res)


# -- simulate ----------------------------------------------------------------

def _rounds_arg(text: str):
    if text == "stable":
        return None
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError("expected a round count or 'stable'") from None
    if value < 0:
        raise argparse.ArgumentTypeError("round count must be >= 0")
    return value


def _add_simulate(p):
    p.add_argument("--graph", required=True)
    p.add_argument("--seeds", required=True, help="lines 'node B|W'")
    p.add_argument("--rounds", type=_rounds_arg, default=None, help="N or 'stable' (default)")
    p.add_argument("--tie", choices=[t.value for t in TieRule], default="fair")
    p.add_argument("--seed-rng", type=int, dest="master_seed")
    p.add_argument("--trace-out", help="per-round JSONL")
    p.add_argument("--out")


def _resolve_simulate(a) -> dict:
    return {"graph": a.graph, "seeds": a.seeds, "rounds": "stable" if a.rounds is None else a.rounds,
            "tie": a.tie, "master_seed": _fresh_seed() if a.master_seed is None else a.master_seed}


def _load_seeds(path: str):
    try:
        with open(path, encoding="utf-8") as fh:
            return parse_seed_lines(fh.read())
    except (OSError, UnicodeDecodeError, ValueError) as exc:
        raise SeedLoadError(f"{path}: {exc}") from exc


def _trace_summary(trace: DiffusionTrace, g_n: int) -> dict:
    t = trace.rounds
    return {"n": g_n, "rounds": t, "b_hat": trace.b_hat(t), "w_hat": trace.w_hat(t),
            "r_hat": trace.r_hat(t), "stabilization_time": trace.stabilization_time,
            "uncolored": g_n - trace.r_hat(t),
            "win_colored_majority": attacker_wins(trace, t, WinMode.COLORED_MAJORITY),
            "win_population_majority": attacker_wins(trace, t, WinMode.POPULATION_MAJORITY),
            "ties": int(sum(trace.ties))}


def _exec_simulate(cfg: dict, out: Outputs) -> str:
    g = read_edge_list(cfg["graph"])
    seed = _load_seeds(cfg["seeds"])
    rounds = None if cfg["rounds"] == "stable" else int(cfg["rounds"])
    rng = np.random.default_rng(cfg["master_seed"])
    trace = run_diffusion(g, seed, rounds=rounds, tie=TieRule(cfg["tie"]), rng=rng)
    prov = provenance("simulate", cfg)
    lines = [json.dumps({"provenance": prov}, sort_keys=True)]
    lines += [json.dumps(rec, sort_keys=True) for rec in trace.round_records()]
    out.write("trace_out", "\n".join(lines) + "\n")
    res = _trace_summary(trace, g.n)
    res["provenance"] = prov
    return _dumps(res)


# -- attack-eval -------------------------------------------------------------

def _add_attack_eval(p):
    p.add_argument("--config", required=True, help="experiment JSON")
    p.add_argument("--master-seed", type=int, help="overrides the config's master_seed")
    p.add_argument("--trials", type=int, help="overrides the config's trial count")
    p.add_argument("--jobs", type=int)
    p.add_argument("--trials-out", help="per-trial JSONL")
    p.add_argument("--histogram-csv")
    p.add_argument("--out")


def _load_json(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except (OSError, UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: expected a JSON object")
    return data


def _resolve_attack_eval(a) -> dict:
    data = _load_json(a.config)
    if a.master_seed is not None:
        data["master_seed"] = a.master_seed
    data.setdefault("master_seed", _fresh_seed())
    if a.trials is not None:
        data["trials"] = a.trials
    try:
        cfg = ExperimentConfig.from_dict(data)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"{a.config}: invalid experiment config ({exc!r})") from exc
    return {"experiment": cfg.to_dict(), "master_seed": cfg.master_seed}


def _histogram_csv(hist: dict) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["round", "count"])
    for k, v in sorted(hist.items(), key=lambda kv: int(kv[0])):
        w.writerow([k, v])
    return buf.getvalue()


def _exec_attack_eval(cfg: dict, out: Outputs, jobs: int | None = None) -> str:
    exp = ExperimentConfig.from_dict(cfg["experiment"])
    keep = "trials_out" in out.extra
    stats = run_trials(exp, jobs=jobs, keep_records=keep)
    prov = provenance("attack-eval", cfg)
    if keep:
        lines = [json.dumps({"provenance": prov}, sort_keys=True)]
        lines += [json.dumps(r.to_dict(), sort_keys=True) for r in stats.records]
        out.write("trials_out", "\n".join(lines) + "\n")
    res = stats.to_dict()
    out.write("histogram_csv", _histogram_csv(res["stabilization_histogram"]))
    res["provenance"] = prov
    return _dumps(res)


# -- stabilize ---------------------------------------------------------------

def _add_stabilize(p):
    p.add_argument("--graph", required=True)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--arity", type=int, help="tree arity for the tree bound")
    p.add_argument("--master-seed", type=int)
    p.add_argument("--jobs", type=int)
    p.add_argument("--histogram-csv")
    p.add_argument("--out")


def _resolve_stabilize(a) -> dict:
    return {"graph": a.graph, "alpha": a.alpha, "trials": a.trials, "arity": a.arity,
            "master_seed": _fresh_seed() if a.master_seed is None else a.master_seed}


def _exec_stabilize(cfg: dict, out: Outputs, jobs: int | None = None) -> str:
    g = read_edge_list(cfg["graph"])
    rep = stabilization_bound_check(g, cfg["alpha"], cfg["trials"], cfg["master_seed"],
                                    arity=cfg["arity"], jobs=jobs)
    res = rep.to_dict()
    res["graph_stats"] = graph_stats(g).to_dict() if g.n <= 5000 else None
    out.write("histogram_csv", _histogram_csv(res["histogram"]))
    res["provenance"] = provenance("stabilize", cfg)
    return _dumps(res)


# -- reduce ------------------------------------------------------------------

def _add_reduce(p):
    p.add_argument("--graph", required=True, help="clique-problem graph G'")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--s", type=int, required=True)
    p.add_argument("--roles", help="JSON role map and budgets")
    p.add_argument("--out")


def _resolve_reduce(a) -> dict:
    return {"graph": a.graph, "k": a.k, "s": a.s}


def _exec_reduce(cfg: dict, out: Outputs) -> str:
    art = build_mi_instance(read_edge_list(cfg["graph"]), cfg["k"], cfg["s"])
    prov = provenance("reduce", cfg)
    roles = art.role_map()
    roles["provenance"] = prov
    out.write("roles", _dumps(roles))
    return format_edge_list(art.instance.graph, [PROVENANCE_PREFIX + json.dumps(prov, sort_keys=True)])


# -- mi-solve ----------------------------------------------------------------

def _add_mi_solve(p):
    p.add_argument("--graph", required=True)
    p.add_argument("--b", type=int)
    p.add_argument("--w", type=int)
    p.add_argument("--t", type=int)
    p.add_argument("--roles", help="take b, w, t from a reduce role map")
    p.add_argument("--mode", choices=["exact", "montecarlo", "decide"], default="exact",
                   help="'decide' only tests whether the optimum equals w")
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--master-seed", type=int)
    p.add_argument("--max-placements", type=int, default=200_000)
    p.add_argument("--jobs", type=int)
    p.add_argument("--out")


def _resolve_mi_solve(a) -> dict:
    b, w, t = a.b, a.w, a.t
    if a.roles:
        budgets = _load_json(a.roles).get("budgets", {})
        b = budgets.get("b") if b is None else b
        w = budgets.get("w") if w is None else w
        t = budgets.get("t") if t is None else t
    if None in (b, w, t):
        raise ConfigError("need --b, --w and --t (or --roles)")
    cfg = {"graph": a.graph, "b": int(b), "w": int(w), "t": int(t), "mode": a.mode,
           "max_placements": a.max_placements}
    if a.mode == "montecarlo":
        cfg["trials"] = a.trials
        cfg["master_seed"] = _fresh_seed() if a.master_seed is None else a.master_seed
    return cfg


def _exec_mi_solve(cfg: dict, out: Outputs, jobs: int | None = None) -> str:
    inst = MIInstance(read_edge_list(cfg["graph"]), cfg["b"], cfg["w"], cfg["t"])
    if cfg["mode"] == "decide":
        col = zero_growth_placement(inst) if inst.t > 0 else None
        res = {"optimum_equals_w": col is not None or inst.t == 0, "w": inst.w,
               "black": None if col is None else col.black.tolist(),
               "white": None if col is None else col.white.tolist()}
    else:
        r = mi_bruteforce(inst, cfg["mode"], trials=cfg.get("trials", 1000), seed=cfg.get("master_seed", 0),
                          max_placements=cfg["max_placements"], jobs=resolve_jobs(jobs))
        res = r.to_dict()
    res["provenance"] = provenance("mi-solve", cfg)
    return _dumps(res)


# -- thresholds --------------------------------------------------------------

def _add_thresholds(p):
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--mu", type=float, required=True)
    p.add_argument("--t", type=int, required=True)
    p.add_argument("--delta", type=int, required=True, help="minimum degree")
    p.add_argument("--Delta", type=int, required=True, help="maximum degree")
    p.add_argument("--d", type=int, help="tree arity (default: Delta)")
    p.add_argument("--C", type=float, default=1.0)
    p.add_argument("--C-prime", type=float, default=1.0)
    p.add_argument("--C-dprime", type=float, default=1.0)
    p.add_argument("--out")


def _resolve_thresholds(a) -> dict:
    return {k: getattr(a, k) for k in ("n", "alpha", "epsilon", "mu", "t", "delta", "Delta", "d",
                                       "C", "C_prime", "C_dprime")}


def _exec_thresholds(cfg: dict, out: Outputs) -> str:
    rep = compute_thresholds(**cfg)
    res = rep.to_dict()
    res["provenance"] = provenance("thresholds", cfg)
    return _dumps(res)


# -- replay ------------------------------------------------------------------

def _add_replay(p):
    p.add_argument("artifact", help="a primary output carrying a provenance block")
    p.add_argument("--check", action="store_true", help="compare the regenerated bytes and report")
    p.add_argument("--out")


def read_provenance(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except (OSError, UnicodeDecodeError) as exc:
        raise ReplayError(f"cannot read {path}: {exc}") from exc
    marker = "# " + PROVENANCE_PREFIX
    for line in text.splitlines():
        if line.startswith(marker):
            return json.loads(line[len(marker):])
    try:
        data = json.loads(text)
    except json.JSONDecodeError:
        data = None
    if isinstance(data, dict) and "provenance" in data:
        return data["provenance"]
    raise ReplayError(f"{path} carries no provenance block")


def _exec_replay_target(prov: dict) -> str:
    name = prov.get("subcommand")
    if name not in COMMANDS or name == "replay":
        raise ReplayError(f"cannot replay subcommand {name!r}")
    for p, digest in prov.get("inputs_sha256", {}).items():
        if _digest(p) != digest:
            raise ReplayError(f"input {p} changed since the artifact was made")
    with tempfile.TemporaryDirectory() as tmp:
        return _execute(name, prov["config"], Outputs(os.path.join(tmp, "primary")))


# -- dispatch ----------------------------------------------------------------

Command = tuple[Callable, Callable | None, Callable | None, dict[str, str]]

COMMANDS: dict[str, Command] = {
    "generate": (_add_generate, _resolve_generate, _exec_generate, {"sidecar": "sidecar"}),
    "spectral": (_add_spectral, _resolve_spectral, _exec_spectral, {}),
    "simulate": (_add_simulate, _resolve_simulate, _exec_simulate, {"trace_out": "trace_out"}),
    "attack-eval": (_add_attack_eval, _resolve_attack_eval, _exec_attack_eval,
                    {"trials_out": "trials_out", "histogram_csv": "histogram_csv"}),
    "stabilize": (_add_stabilize, _resolve_stabilize, _exec_stabilize, {"histogram_csv": "histogram_csv"}),
    "reduce": (_add_reduce, _resolve_reduce, _exec_reduce, {"roles": "roles"}),
    "mi-solve": (_add_mi_solve, _resolve_mi_solve, _exec_mi_solve, {}),
    "thresholds": (_add_thresholds, _resolve_thresholds, _exec_thresholds, {}),
    "replay": (_add_replay, None, None, {}),
}
_PARALLEL = {"attack-eval", "stabilize", "mi-solve"}


def _execute(name: str, cfg: dict, out: Outputs, jobs: int | None = None) -> str:
    fn = COMMANDS[name][2]
    if name in _PARALLEL:
        return fn(cfg, out, jobs=jobs)
    return fn(cfg, out)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog=TOOL, description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"{TOOL} {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (add, *_rest) in COMMANDS.items():
        add(sub.add_parser(name))
    return parser


def _emit(text: str, path: str | None) -> None:
    if path:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def run_command(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if args.command == "replay":
            prov = read_provenance(args.artifact)
            text = _exec_replay_target(prov)
            if args.check:
                with open(args.artifact, encoding="utf-8") as fh:
                    same = fh.read() == text
                _emit(_dumps({"artifact": args.artifact, "subcommand": prov["subcommand"],
                              "reproduced": same}), args.out)
                return 0 if same else 1
            _emit(text, args.out)
            return 0
        _, resolve, _, extra = COMMANDS[args.command]
        cfg = resolve(args)
        if "master_seed" in cfg:
            print(f"master seed: {cfg['master_seed']}", file=sys.stderr)
        out = Outputs(getattr(args, "out", None), **{k: getattr(args, attr) for k, attr in extra.items()})
        text = _execute(args.command, cfg, out, getattr(args, "jobs", None))
        _emit(text, out.primary)
        return 0
    except OpinionForgeError as exc:
        print(json.dumps(exc.to_dict(), sort_keys=True), file=sys.stderr)
        return 1
    except (OSError, ValueError, KeyError, TypeError) as exc:
        # malformed input that slipped past the domain checks
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}, sort_keys=True), file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run_command())


if __name__ == "__main__":
    main()
