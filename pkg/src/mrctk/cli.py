"""Command-line interface: validate, stats, eval, ensemble and compare.

Settings come from library defaults, overridden by an optional JSON config
file (``--config``), overridden by explicit flags, so an experiment is
replayable from a single artifact. Every command is deterministic given
its inputs and seed.

Exit codes: 0 success, 2 usage, 3 unreadable or malformed input,
4 validation errors found, 5 evaluation-contract failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Sequence

from .compare import compare_runs
from .data import (
    DEFAULT_K_MAX,
    DatasetError,
    Run,
    RunError,
    dataset_stats,
    load_dataset,
    load_run,
    validate_dataset,
    write_run,
)
from .ensemble import FuseConfig, fuse_candidates, run_from_candidates
from .metrics import PRR_FIRST_MATCH, PRR_MODES, GoldMismatchError, evaluate_run
from .textnorm import NormConfig

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_PARSE = 3
EXIT_VALIDATION = 4
EXIT_CONTRACT = 5

_NORM_FLAGS = (
    "strip_diacritics",
    "strip_tatweel",
    "normalize_alef_ya",
    "strip_punctuation",
    "collapse_whitespace",
    "lowercase_latin",
)


class ConfigError(ValueError):
    """Bad config file or inconsistent flag values."""


# ---------------------------------------------------------------------------
# Config resolution: defaults <- config file <- flags
# ---------------------------------------------------------------------------

def _load_config(path: str | None) -> dict:
    if not path:
        return {}
    try:
        with open(path, "r", encoding="utf-8") as f:
            cfg = json.load(f)
    except json.JSONDecodeError as e:
        raise ConfigError(f"config file {path}: malformed JSON: {e.msg}") from e
    if not isinstance(cfg, dict):
        raise ConfigError(f"config file {path}: expected a JSON object")
    return cfg

def _resolve_norm(args: argparse.Namespace, file_cfg: dict) -> NormConfig:
    values = NormConfig().to_dict()
    file_norm = file_cfg.get("norm", {})
    if not isinstance(file_norm, dict):
        raise ConfigError("config key 'norm' must be an object")
    try:
        values.update(NormConfig.from_dict({**values, **file_norm}).to_dict())
    except (TypeError, ValueError) as e:
        raise ConfigError(f"config key 'norm': {e}") from e
    if getattr(args, "unicode_form", None) is not None:
        values["unicode_form"] = None if args.unicode_form == "none" else args.unicode_form
    for name in _NORM_FLAGS:
        flag = getattr(args, name, None)
        if flag is not None:
            values[name] = flag
    if getattr(args, "identity_norm", False):
        return NormConfig.identity()
    return NormConfig.from_dict(values)


def _resolve(args: argparse.Namespace, file_cfg: dict, key: str, default):
    flag = getattr(args, key, None)
    if flag is not None:
        return flag
    return file_cfg.get(key, default)


def _resolve_fuse(args: argparse.Namespace, file_cfg: dict, norm: NormConfig) -> FuseConfig:
    file_fuse = file_cfg.get("fuse", {})
    if not isinstance(file_fuse, dict):
        raise ConfigError("config key 'fuse' must be an object")
    values = {
        "aggregation": "mean",
        "match_policy": "normalized_equality",
        "count_weighting": False,
    }
    unknown = set(file_fuse) - set(values)
    if unknown:
        raise ConfigError(f"unknown fuse config keys: {sorted(unknown)}")
    values.update(file_fuse)
    for key in values:
        flag = getattr(args, key, None)
        if flag is not None:
            values[key] = flag
    try:
        return FuseConfig(
            norm=norm,
            k_max=_resolve(args, file_cfg, "k_max", DEFAULT_K_MAX),
            **values,
        )
    except ValueError as e:
        raise ConfigError(str(e)) from e


def _resolve_field_map(args: argparse.Namespace, file_cfg: dict) -> dict | None:
    raw = getattr(args, "field_map", None)
    if raw is not None:
        try:
            parsed = json.loads(raw)
        except json.JSONDecodeError as e:
            raise ConfigError(f"--field-map: malformed JSON: {e.msg}") from e
        if not isinstance(parsed, dict):
            raise ConfigError("--field-map must be a JSON object")
        return parsed
    fmap = file_cfg.get("field_map")
    if fmap is not None and not isinstance(fmap, dict):
        raise ConfigError("config key 'field_map' must be an object")
    return fmap


# ---------------------------------------------------------------------------
# Rendering
# ---------------------------------------------------------------------------

def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _json_text(obj: dict) -> str:
    return json.dumps(obj, ensure_ascii=False, indent=2) + "\n"


def _eval_table(report) -> str:
    width = max([len("pq_id")] + [len(q.pq_id) for q in report.per_question])
    lines = [f"{'pq_id':<{width}}  {'pRR':>8}  {'EM':>8}  {'F1@1':>8}"]
    for q in report.per_question:
        lines.append(
            f"{q.pq_id:<{width}}  {q.prr:>8.6f}  {q.em:>8d}  {q.f1_at_1:>8.6f}")
    lines.append("-" * (width + 32))
    lines.append(
        f"{'macro':<{width}}  {report.macro_prr:>8.6f}  "
        f"{report.macro_em:>8.6f}  {report.macro_f1_at_1:>8.6f}")
    lines.append(
        f"questions: {report.n_questions}  missing: {report.n_missing}  "
        f"prr_mode: {report.prr_mode}")
    return "\n".join(lines) + "\n"


def _validation_table(report) -> str:
    lines = []
    for f in report.errors:
        lines.append(f"ERROR  {f.locator}  [{f.rule}]  {f.message}")
    for f in report.warnings:
        lines.append(f"WARN   {f.locator}  [{f.rule}]  {f.message}")
    lines.append(
        f"ok: {str(report.ok).lower()}  errors: {len(report.errors)}  "
        f"warnings: {len(report.warnings)}")
    return "\n".join(lines) + "\n"


def _compare_table(report) -> str:
    lines = [f"{'metric':<8} {'macro_a':>9} {'macro_b':>9} {'delta':>9} "
             f"{'ci_low':>9} {'ci_high':>9}"]
    for key, m in report.metrics.items():
        lines.append(
            f"{key:<8} {m.macro_a:>9.6f} {m.macro_b:>9.6f} {m.delta:>+9.6f} "
            f"{m.ci_low:>+9.6f} {m.ci_high:>+9.6f}")
    lines.append(
        f"runs: {report.run_a} vs {report.run_b}  questions: "
        f"{report.n_questions}  n_boot: {report.n_boot}  seed: {report.seed}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def cmd_validate(args: argparse.Namespace) -> int:
    file_cfg = _load_config(args.config)
    strict = bool(_resolve(args, file_cfg, "strict", False))
    records = load_dataset(args.dataset, _resolve_field_map(args, file_cfg))
    report = validate_dataset(records, strict=strict)
    if args.format == "json":
        _emit(_json_text(report.to_dict()), args.out)
    else:
        _emit(_validation_table(report), args.out)
    return EXIT_OK if report.ok else EXIT_VALIDATION


def cmd_stats(args: argparse.Namespace) -> int:
    file_cfg = _load_config(args.config)
    records = load_dataset(args.dataset, _resolve_field_map(args, file_cfg))
    stats = dataset_stats(records)
    if args.format == "json":
        _emit(_json_text({
            "schema_version": 1,
            "kind": "stats",
            "qp_pairs": stats.qp_pairs,
            "qpa_triplets": stats.qpa_triplets,
        }), args.out)
    else:
        _emit(
            f"{'Q-P Pairs':>12}  {'Q-P-A Triplets':>15}\n"
            f"{stats.qp_pairs:>12}  {stats.qpa_triplets:>15}\n",
            args.out)
    return EXIT_OK


def cmd_eval(args: argparse.Namespace) -> int:
    file_cfg = _load_config(args.config)
    norm = _resolve_norm(args, file_cfg)
    mode = _resolve(args, file_cfg, "prr_mode", PRR_FIRST_MATCH)
    strict = bool(_resolve(args, file_cfg, "strict", False))
    k_max = _resolve(args, file_cfg, "k_max", DEFAULT_K_MAX)
    gold = load_dataset(args.dataset, _resolve_field_map(args, file_cfg))
    run = load_run(args.run, k_max=k_max)
    report = evaluate_run(run, gold, norm, mode, strict=strict)
    if args.format == "json":
        _emit(_json_text(report.to_dict()), args.out)
    else:
        _emit(_eval_table(report), args.out)
    return EXIT_OK


def cmd_ensemble(args: argparse.Namespace) -> int:
    file_cfg = _load_config(args.config)
    norm = _resolve_norm(args, file_cfg)
    fuse_cfg = _resolve_fuse(args, file_cfg, norm)
    runs = [load_run(path, k_max=fuse_cfg.k_max) for path in args.runs]
    table = fuse_candidates(runs, fuse_cfg)
    fused = run_from_candidates(table)
    Path(args.out).write_bytes(write_run(fused, k_max=fuse_cfg.k_max))
    supports = [c.support for cands in table.values() for c in cands]
    histogram = {
        s: supports.count(s) for s in sorted(set(supports))
    }
    sys.stdout.write(
        f"fused {len(runs)} run(s) over {len(table)} question(s) -> {args.out}\n")
    for support, count in histogram.items():
        sys.stdout.write(
            f"  answers supported by {support}/{len(runs)} run(s): {count}\n")
    if args.sidecar:
        sidecar = {
            "schema_version": 1,
            "kind": "fusion",
            "inputs": [r.run_id for r in runs],
            "aggregation": fuse_cfg.aggregation,
            "match_policy": fuse_cfg.match_policy,
            "count_weighting": fuse_cfg.count_weighting,
            "k_max": fuse_cfg.k_max,
            "norm_config": norm.to_dict(),
            "questions": {
                pq_id: [
                    {
                        "text": c.text,
                        "agg_score": round(c.agg_score, 6),
                        "support": c.support,
                        "source_scores": [
                            [rid, round(s, 6)] for rid, s in c.source_scores
                        ],
                    }
                    for c in cands
                ]
                for pq_id, cands in table.items()
            },
        }
        Path(args.sidecar).write_text(_json_text(sidecar), encoding="utf-8")
    return EXIT_OK


def cmd_compare(args: argparse.Namespace) -> int:
    file_cfg = _load_config(args.config)
    norm = _resolve_norm(args, file_cfg)
    mode = _resolve(args, file_cfg, "prr_mode", PRR_FIRST_MATCH)
    strict = bool(_resolve(args, file_cfg, "strict", False))
    k_max = _resolve(args, file_cfg, "k_max", DEFAULT_K_MAX)
    n_boot = _resolve(args, file_cfg, "n_boot", 1000)
    seed = _resolve(args, file_cfg, "seed", 0)
    gold = load_dataset(args.dataset, _resolve_field_map(args, file_cfg))
    run_a = load_run(args.run_a, k_max=k_max)
    run_b = load_run(args.run_b, k_max=k_max)
    report = compare_runs(
        run_a, run_b, gold, norm, mode,
        n_boot=n_boot, seed=seed, strict=strict)
    if args.format == "json":
        _emit(_json_text(report.to_dict()), args.out)
    else:
        _emit(_compare_table(report), args.out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON config file; flags override its values")
    p.add_argument("--format", choices=("table", "json"), default="table")
    p.add_argument("--out", help="write the report here instead of stdout")


def _add_norm_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("normalization")
    g.add_argument("--unicode-form", choices=("none", "NFC", "NFD", "NFKC", "NFKD"))
    for name in _NORM_FLAGS:
        g.add_argument(
            f"--{name.replace('_', '-')}",
            action=argparse.BooleanOptionalAction,
            default=None,
        )
    g.add_argument(
        "--identity-norm", action="store_true",
        help="disable every transform (raw string comparison)")


def _add_dataset_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument(
        "--field-map",
        help="JSON object renaming canonical dataset fields to on-disk keys")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mrctk",
        description="Validate datasets, score ranked-answer runs, fuse runs "
                    "and compare systems for span-prediction reading "
                    "comprehension.",
        epilog="exit codes: 0 ok, 2 usage, 3 unreadable/malformed input, "
               "4 validation errors, 5 evaluation-contract failure",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check dataset invariants")
    p.add_argument("dataset")
    p.add_argument("--strict", action=argparse.BooleanOptionalAction, default=None)
    _add_dataset_flags(p)
    _add_common(p)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("stats", help="count Q-P pairs and Q-P-A triplets")
    p.add_argument("dataset")
    _add_dataset_flags(p)
    _add_common(p)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("eval", help="score a run against gold answers")
    p.add_argument("run")
    p.add_argument("dataset")
    p.add_argument("--prr-mode", dest="prr_mode", choices=PRR_MODES)
    p.add_argument("--strict", action=argparse.BooleanOptionalAction, default=None)
    p.add_argument("--k-max", dest="k_max", type=int)
    _add_dataset_flags(p)
    _add_norm_flags(p)
    _add_common(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("ensemble", help="fuse ranked runs into one run")
    p.add_argument("runs", nargs="+")
    p.add_argument("--out", required=True, help="path for the fused run file")
    p.add_argument("--sidecar", help="write fusion provenance JSON here")
    p.add_argument("--aggregation",
                   choices=("mean", "pairwise_running", "max", "sum"))
    p.add_argument("--match-policy", dest="match_policy",
                   choices=("raw_equality", "normalized_equality"))
    p.add_argument("--count-weighting", dest="count_weighting",
                   action=argparse.BooleanOptionalAction, default=None)
    p.add_argument("--k-max", dest="k_max", type=int)
    p.add_argument("--config", help="JSON config file; flags override its values")
    _add_norm_flags(p)
    p.set_defaults(func=cmd_ensemble)

    p = sub.add_parser("compare", help="paired comparison of two runs")
    p.add_argument("run_a")
    p.add_argument("run_b")
    p.add_argument("dataset")
    p.add_argument("--prr-mode", dest="prr_mode", choices=PRR_MODES)
    p.add_argument("--strict", action=argparse.BooleanOptionalAction, default=None)
    p.add_argument("--k-max", dest="k_max", type=int)
    p.add_argument("--n-boot", dest="n_boot", type=int)
    p.add_argument("--seed", type=int)
    _add_dataset_flags(p)
    _add_norm_flags(p)
    _add_common(p)
    p.set_defaults(func=cmd_compare)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else EXIT_USAGE
    try:
        return args.func(args)
    except ConfigError as e:
        print(f"mrctk: config error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (FileNotFoundError, IsADirectoryError, PermissionError) as e:
        print(f"mrctk: cannot read input: {e}", file=sys.stderr)
        return EXIT_PARSE
    except (DatasetError, RunError) as e:
        print(f"mrctk: {e}", file=sys.stderr)
        return EXIT_PARSE
    except GoldMismatchError as e:
        print(f"mrctk: {e}", file=sys.stderr)
        return EXIT_CONTRACT
    except ValueError as e:
        print(f"mrctk: {e}", file=sys.stderr)
        return EXIT_USAGE


def entrypoint() -> None:
    sys.exit(main())
