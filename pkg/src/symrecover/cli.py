"""Command line front end and batch experiment harness.

    symrecover table build   --problem clique --n 4 --out clique4.stb
    symrecover table corrupt --table clique4.stb --delta 0.2 --seed 7 --out-mask m.smk
    symrecover recover one   --problem clique --n 5 --instance 1023 --delta 0.2 --seed 1
    symrecover experiment run --config exp.cfg --report out.json
    symrecover aut order     --graph g.txt
    symrecover classify      --graph g.txt --k 3
    symrecover ov run        --input v.txt --delta 0.2 --samples 201
    symrecover parity run    --graph g.txt --k 3 --delta 0.2 --samples 201
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import time
from dataclasses import dataclass, field, fields, replace
from fractions import Fraction
from pathlib import Path

from . import finegrained as fg
from .noise import (
    CorruptionModel,
    Strategy,
    as_fraction,
    build_table,
    corrupt,
    derive_seed,
    read_table,
    write_mask,
    write_table,
)
from .perm import AutStrategy
from .problems import OVProblem, ParityKCliqueProblem, instance_aut_group, make_problem, parse_graph_text
from .recover import (
    MajorityUndefined,
    RecoveryConfig,
    RecoveryReduction,
    recover_one,
    recovery_threshold,
    union_bound,
)

PARAM_KEYS = ("n", "k", "q", "d", "sigma", "count")
SUBSET_PROBLEMS = ("clique", "indset", "vertexcover")
TRIAL_FIELDS = ("seed", "corrupted", "total", "symmetric", "query_branch", "correct",
                "majority_undefined", "queries", "ms")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    problem: str = "clique"
    params: dict = field(default_factory=dict)
    delta: Fraction = Fraction(0)
    epsilon: Fraction = Fraction(1, 4)
    sample_size: int | None = None
    trials: int = 1
    seed: int = 0
    model: str = "exact"
    strategy: str | None = None  # flip for Boolean semigroups, replace otherwise
    constant: int | None = None
    parallelism: int = 1
    aut_strategy: str = "backtracking"
    table: str | None = None
    report: str | None = None
    format: str = "json"
    timing: bool = True

    def validate(self) -> "ExperimentConfig":
        if self.trials < 1:
            raise ConfigError("trials must be at least 1")
        if not 0 <= self.delta < Fraction(1, 2):
            raise ConfigError(f"delta must lie in [0, 1/2), got {self.delta}")
        if not 0 < self.epsilon < Fraction(1, 2):
            raise ConfigError(f"epsilon must lie in (0, 1/2), got {self.epsilon}")
        if self.sample_size is not None and self.sample_size < 1:
            raise ConfigError("sample_size must be positive")
        if self.parallelism < 1:
            raise ConfigError("parallelism must be positive")
        if not 0 <= self.seed < 1 << 64:
            raise ConfigError("seed must be a 64-bit unsigned integer")
        if self.format not in ("json", "csv"):
            raise ConfigError(f"format must be json or csv, got {self.format!r}")
        CorruptionModel(self.model)
        AutStrategy(self.aut_strategy)
        if self.strategy is not None:
            Strategy(self.strategy)
        return self

    def echo(self) -> dict:
        """Config as stored in reports; parallelism is left out so it cannot change a report."""
        out = {}
        for f in fields(self):
            if f.name == "parallelism":
                continue
            v = getattr(self, f.name)
            if isinstance(v, Fraction):
                v = str(v)
            elif isinstance(v, dict):
                v = dict(sorted(v.items()))
            out[f.name] = v
        return out


_SCALARS = {
    "delta": as_fraction, "epsilon": as_fraction, "sample_size": int, "trials": int,
    "seed": int, "model": str, "strategy": str, "constant": int, "parallelism": int,
    "aut_strategy": str, "table": str, "report": str, "format": str, "problem": str,
}


def _coerce(key: str, raw):
    if key == "timing":
        if isinstance(raw, bool):
            return raw
        text = str(raw).strip().lower()
        if text not in ("true", "false", "1", "0", "yes", "no"):
            raise ValueError(f"not a boolean: {raw!r}")
        return text in ("true", "1", "yes")
    if key in PARAM_KEYS:
        return int(raw)
    return _SCALARS[key](raw)


def parse_config(path=None, overrides: dict | None = None) -> ExperimentConfig:
    """Read ``key = value`` lines (``#`` comments), then apply ``overrides``."""
    values: dict = {}
    params: dict = {}
    known = set(_SCALARS) | set(PARAM_KEYS) | {"timing"}
    if path is not None:
        text = Path(path).read_text(encoding="utf-8")
        for lineno, line in enumerate(text.splitlines(), start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
            key, raw = (part.strip() for part in line.split("=", 1))
            if key not in known:
                raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
            try:
                value = _coerce(key, raw)
            except (ValueError, ZeroDivisionError) as exc:
                raise ConfigError(f"{path}:{lineno}: bad value for {key}: {exc}") from None
            (params if key in PARAM_KEYS else values)[key] = value
    for key, raw in (overrides or {}).items():
        if raw is None:
            continue
        if key not in known:
            raise ConfigError(f"unknown option {key!r}")
        try:
            value = _coerce(key, raw)
        except (ValueError, ZeroDivisionError) as exc:
            raise ConfigError(f"bad value for {key}: {exc}") from None
        (params if key in PARAM_KEYS else values)[key] = value
    return ExperimentConfig(params=params, **values).validate()


@dataclass
class ExperimentReport:
    config: dict
    trials: list = field(default_factory=list)
    theoretical_bound: float | None = None
    sample_size: int | None = None
    entry_count: int | None = None

    def aggregate(self) -> dict:
        total = sum(t["total"] for t in self.trials)
        correct = sum(t["correct"] for t in self.trials)
        bound = self.theoretical_bound
        return {
            "instance_success_rate": correct / total if total else None,
            "trial_all_correct_rate": (sum(t["correct"] == t["total"] for t in self.trials)
                                       / len(self.trials)) if self.trials else None,
            "theoretical_bound": bound,
            "bound_vacuous": None if bound is None else bound >= 1,
            "sample_size": self.sample_size,
            "entry_count": self.entry_count,
        }

    def as_dict(self) -> dict:
        return {"config": self.config, "trials": [dict(t) for t in self.trials],
                "aggregate": self.aggregate()}

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), indent=2) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(("trial",) + TRIAL_FIELDS)
        for i, t in enumerate(self.trials):
            w.writerow([i] + [t[k] for k in TRIAL_FIELDS])
        return buf.getvalue()

    @classmethod
    def from_json(cls, text: str) -> "ExperimentReport":
        doc = json.loads(text)
        agg = doc.get("aggregate", {})
        return cls(doc["config"], doc["trials"], agg.get("theoretical_bound"),
                   agg.get("sample_size"), agg.get("entry_count"))

    @classmethod
    def from_csv(cls, text: str, config: dict | None = None) -> "ExperimentReport":
        rows = list(csv.DictReader(io.StringIO(text)))
        trials = [{k: (float(r[k]) if k == "ms" else int(r[k])) for k in TRIAL_FIELDS}
                  for r in rows]
        for t in trials:
            if t["ms"] == int(t["ms"]):
                t["ms"] = int(t["ms"])
        return cls(config or {}, trials)

    def check_consistency(self) -> None:
        for i, t in enumerate(self.trials):
            if t["symmetric"] + t["query_branch"] != t["total"]:
                raise AssertionError(f"trial {i}: branch counts do not sum to total")
            if not 0 <= t["correct"] <= t["total"]:
                raise AssertionError(f"trial {i}: correct outside [0, total]")
            if not 0 <= t["majority_undefined"] <= t["query_branch"]:
                raise AssertionError(f"trial {i}: undefined majorities exceed query-branch count")
            if t["queries"] < 0 or t["corrupted"] < 0:
                raise AssertionError(f"trial {i}: negative count")


def emit_report(report: ExperimentReport, format: str = "json", path=None) -> str:
    """Serialize ``report``; also write it to ``path`` when given."""
    if format == "json":
        text = report.to_json()
    elif format == "csv":
        text = report.to_csv()
    else:
        raise ValueError(f"unknown report format {format!r}")
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text


def _default_strategy(problem) -> str:
    return "flip" if problem.semigroup.boolean else "replace"


def run_experiment(config: ExperimentConfig, log=None) -> ExperimentReport:
    config.validate()
    problem = make_problem(config.problem, config.params)
    table = read_table(config.table) if config.table else build_table(problem, config.parallelism)
    if table.entry_count != problem.instance_count:
        raise ConfigError("loaded table does not match the problem's instance space")
    strategy = config.strategy or _default_strategy(problem)
    est = RecoveryReduction(config.epsilon, config.sample_size, config.aut_strategy,
                            config.parallelism).fit(problem)
    report = ExperimentReport(config.echo(), [],
                              union_bound(table.entry_count, est.s_, config.delta),
                              est.s_, table.entry_count)
    for trial in range(config.trials):
        seed = derive_seed(config.seed, trial)
        start = time.perf_counter()
        ct, mask = corrupt(table, config.delta, seed, config.model, strategy,
                           config.constant, value_range=table.value_range)
        rep = est.report(ct, table)
        ms = round((time.perf_counter() - start) * 1000, 3) if config.timing else 0
        report.trials.append({
            "seed": seed, "corrupted": mask.count, "total": rep.total,
            "symmetric": rep.symmetric, "query_branch": rep.query_branch,
            "correct": rep.correct, "majority_undefined": rep.majority_undefined,
            "queries": rep.queries, "ms": ms,
        })
        if log:
            log(f"trial {trial}: {rep.correct}/{rep.total} correct, {rep.queries} queries")
    return report


# -- argument handling -------------------------------------------------------

def _add_problem_args(p, required=True):
    p.add_argument("--problem", required=required)
    for key in PARAM_KEYS:
        p.add_argument(f"--{key}", type=int)


def _add_noise_args(p):
    p.add_argument("--delta", default="0")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--model", default="exact", choices=[m.value for m in CorruptionModel])
    p.add_argument("--strategy", choices=[s.value for s in Strategy])
    p.add_argument("--constant", type=int)


def _params(args) -> dict:
    return {k: getattr(args, k) for k in PARAM_KEYS if getattr(args, k, None) is not None}


def _read_graph(path: str):
    return parse_graph_text(Path(path).read_text(encoding="utf-8"))


def _print_json(obj) -> None:
    print(json.dumps(obj, indent=2))


def cmd_table_build(args) -> int:
    problem = make_problem(args.problem, _params(args))
    table = build_table(problem, args.parallelism)
    write_table(table, args.out)
    _print_json({"problem": problem.id, "n": problem.n, "entries": table.entry_count,
                 "out": args.out})
    return 0


def cmd_table_corrupt(args) -> int:
    table = read_table(args.table)
    strategy = args.strategy or ("flip" if table.value_range == (0, 1) else "replace")
    ct, mask = corrupt(table, as_fraction(args.delta), args.seed, args.model, strategy,
                       args.constant, value_range=table.value_range)
    if args.out_mask:
        write_mask(mask, args.out_mask, table.problem_id, table.n)
    if args.out:
        write_table(replace(table, entries=ct.values), args.out)
    _print_json({"entries": table.entry_count, "corrupted": mask.count, "seed": args.seed,
                 "delta": str(mask.delta), "model": mask.model.value})
    return 0


def _problem_and_instance(args):
    if args.graph:
        g = _read_graph(args.graph)
        params = _params(args)
        params["n"] = g.n
        pid = args.problem or "clique"
        # for the subset problems k is part of the instance, not a problem parameter
        k = params.pop("k", 1) if pid in SUBSET_PROBLEMS else None
        problem = make_problem(pid, params)
        return problem, g.edges if k is None else problem.encode((k, g))
    if args.problem is None or args.instance is None:
        raise SystemExit("give --graph, or --problem with --instance")
    return make_problem(args.problem, _params(args)), args.instance


def cmd_recover_one(args) -> int:
    problem, instance = _problem_and_instance(args)
    table = read_table(args.table) if args.table else build_table(problem)
    strategy = args.strategy or _default_strategy(problem)
    ct, _ = corrupt(table, as_fraction(args.delta), args.seed, args.model, strategy,
                    args.constant, value_range=table.value_range)
    config = RecoveryConfig(as_fraction(args.epsilon), args.sample_size)
    try:
        out = recover_one(problem, instance, ct, config, args.aut_strategy)
    except MajorityUndefined as exc:
        _print_json({"instance": instance, "error": "MajorityUndefined", "detail": str(exc)})
        return 2
    _print_json({
        "instance": instance, "value": out.value, "branch": out.branch.value,
        "aut_order": out.aut_order, "queries": out.queries_made,
        "majority_margin": None if out.majority_margin is None else str(out.majority_margin),
        "sample_size": recovery_threshold(problem, config), "truth": int(table.entries[instance]),
    })
    return 0


def cmd_experiment_run(args) -> int:
    overrides = {
        "problem": args.problem, "delta": args.delta, "epsilon": args.epsilon,
        "sample_size": args.sample_size, "trials": args.trials, "seed": args.seed,
        "model": args.model, "strategy": args.strategy, "parallelism": args.parallelism,
        "report": args.report, "format": args.format, "table": args.table,
        "timing": None if args.timing is None else args.timing == "on",
        **_params(args),
    }
    try:
        config = parse_config(args.config, overrides)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    log = (lambda msg: print(msg, file=sys.stderr)) if args.verbose else None
    report = run_experiment(config, log)
    text = emit_report(report, config.format, config.report)
    if config.report is None:
        sys.stdout.write(text)
    return 0


def cmd_aut_order(args) -> int:
    problem, instance = _problem_and_instance(args)
    chain = instance_aut_group(problem, instance, args.aut_strategy)
    _print_json({"problem": problem.id, "instance": instance, "aut_order": chain.order(),
                 "generators": [str(g) for g in chain.strong_generators]})
    return 0


def cmd_classify(args) -> int:
    g = _read_graph(args.graph)
    family = fg.classify_graph(g)
    out = {"n": g.n, "family": str(family)}
    if not family.is_other and g.n >= 4:
        out["aut_order"] = fg.aut_order_closed_form(family, g.n)
        if args.k is not None:
            out["k_cliques"] = fg.count_k_cliques_special(family, g.n, args.k)
    _print_json(out)
    return 0


def cmd_ov_run(args) -> int:
    V = fg.parse_ov_text(Path(args.input).read_text(encoding="utf-8"))
    problem = OVProblem(V.n, {"d": V.d})
    table = build_table(problem)
    ct, _ = corrupt(table, as_fraction(args.delta), args.seed, args.model,
                    args.strategy or "flip")
    samples = args.samples or fg.default_samples(V.n, as_fraction(args.epsilon))
    direct = fg.ov_shortcut(V)
    try:
        answer = direct if direct is not None else fg.ov_recover(V, ct, samples=samples,
                                                                 seed=args.sample_seed)
    except MajorityUndefined:
        _print_json({"error": "MajorityUndefined", "samples": samples})
        return 2
    _print_json({"answer": answer, "path": "shortcut" if direct is not None else "sampled",
                 "queries": ct.query_count, "samples": samples,
                 "brute_force": fg.ov_brute_force(V),
                 "failure_bound": fg.majority_failure_bound(samples, as_fraction(args.delta))})
    return 0


def cmd_parity_run(args) -> int:
    g = _read_graph(args.graph)
    problem = ParityKCliqueProblem(g.n, {"k": args.k})
    table = build_table(problem)
    ct, _ = corrupt(table, as_fraction(args.delta), args.seed, args.model,
                    args.strategy or "flip")
    samples = args.samples or fg.default_samples(g.n, as_fraction(args.epsilon))
    family = fg.classify_graph(g)
    try:
        bit = fg.parity_kclique_recover(g, args.k, ct, samples=samples, seed=args.sample_seed)
    except MajorityUndefined:
        _print_json({"error": "MajorityUndefined", "samples": samples})
        return 2
    _print_json({"parity": bit, "family": str(family), "queries": ct.query_count,
                 "samples": samples, "brute_force": fg.count_k_cliques_brute(g, args.k) & 1})
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="symrecover", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="group", required=True)

    table = sub.add_parser("table", help="build or corrupt truth tables").add_subparsers(
        dest="action", required=True)
    p = table.add_parser("build")
    _add_problem_args(p)
    p.add_argument("--parallelism", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_table_build)
    p = table.add_parser("corrupt")
    p.add_argument("--table", required=True)
    _add_noise_args(p)
    p.add_argument("--out-mask")
    p.add_argument("--out", help="write the corrupted contents as a table file")
    p.set_defaults(func=cmd_table_corrupt)

    p = sub.add_parser("recover").add_subparsers(dest="action", required=True).add_parser("one")
    _add_problem_args(p, required=False)
    p.add_argument("--instance", type=int)
    p.add_argument("--graph")
    p.add_argument("--table")
    _add_noise_args(p)
    p.add_argument("--epsilon", default="1/4")
    p.add_argument("--sample-size", type=int)
    p.add_argument("--aut-strategy", default="backtracking")
    p.set_defaults(func=cmd_recover_one)

    p = sub.add_parser("experiment").add_subparsers(dest="action", required=True).add_parser("run")
    p.add_argument("--config")
    _add_problem_args(p, required=False)
    p.add_argument("--delta")
    p.add_argument("--epsilon")
    p.add_argument("--sample-size", type=int)
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--model")
    p.add_argument("--strategy")
    p.add_argument("--parallelism", type=int)
    p.add_argument("--table")
    p.add_argument("--report")
    p.add_argument("--format", choices=["json", "csv"])
    p.add_argument("--timing", choices=["on", "off"])
    p.add_argument("--verbose", action="store_true")
    p.set_defaults(func=cmd_experiment_run)

    p = sub.add_parser("aut").add_subparsers(dest="action", required=True).add_parser("order")
    _add_problem_args(p, required=False)
    p.add_argument("--instance", type=int)
    p.add_argument("--graph")
    p.add_argument("--aut-strategy", default="backtracking")
    p.set_defaults(func=cmd_aut_order)

    p = sub.add_parser("classify")
    p.add_argument("--graph", required=True)
    p.add_argument("--k", type=int)
    p.set_defaults(func=cmd_classify)

    for name, func in (("ov", cmd_ov_run), ("parity", cmd_parity_run)):
        p = sub.add_parser(name).add_subparsers(dest="action", required=True).add_parser("run")
        if name == "ov":
            p.add_argument("--input", required=True)
        else:
            p.add_argument("--graph", required=True)
            p.add_argument("--k", type=int, default=3)
        _add_noise_args(p)
        p.add_argument("--epsilon", default="3/10")
        p.add_argument("--samples", type=int)
        p.add_argument("--sample-seed", type=int, default=0)
        p.set_defaults(func=func)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
