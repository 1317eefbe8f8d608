"""Command-line driver: table checks, gain analysis, simulation, reports.

Every run writes a JSON manifest next to its primary output recording the
resolved settings and emitted files; replaying the recorded argv
reproduces the outputs byte for byte.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from fractions import Fraction
from pathlib import Path

from . import __version__
from .errors import LsticError
from .ideals import ideal_power, principal_ideal, verify_prime_factorization
from .lstic import (
    LsticCode,
    SideInfoConfig,
    build_code,
    predict_cer,
    side_info_gain,
    table_code,
    table_rows,
)
from .mimo_sim import SimConfig, measure_gain, read_csv, simulate_cer, write_csv
from .numfield import load_tower

FAMILIES = ("golden", "perfect3", "perfect4", "perfect6", "alamouti")


def _parse_snr(text: str) -> tuple[float, ...]:
    """Either a:step:b (inclusive) or a comma-separated list."""
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ValueError(f"SNR range must be a:step:b, got {text!r}")
        a, step, b = (float(p) for p in parts)
        if step <= 0:
            raise ValueError("SNR step must be positive")
        grid = []
        k = 0
        while True:
            s = a + k * step
            if s > b + 1e-9:
                break
            grid.append(round(s, 9))
            k += 1
        return tuple(grid)
    return tuple(float(p) for p in text.split(",") if p)


def _parse_subset(text: str) -> tuple[int, ...]:
    return tuple(int(p) for p in text.split(",") if p)


def _parse_ideal_spec(t, text: str):
    """Table-row references 'p' or 'p:i', comma separated."""
    rows = {row.p: row for row in table_rows(t)}
    ideals = []
    for token in text.split(","):
        token = token.strip()
        if not token:
            continue
        if ":" in token:
            p_text, i_text = token.split(":", 1)
            p, i = int(p_text), int(i_text)
            row = rows.get(p)
            if row is None:
                raise ValueError(f"no table row for prime {p}")
            if not 0 <= i < len(row.ideals):
                raise ValueError(f"prime {p} has {len(row.ideals)} ideals, index {i} is out of range")
            ideals.append(ideal_power(row.ideals[i], row.e))
        else:
            p = int(token)
            row = rows.get(p)
            if row is None:
                raise ValueError(f"no table row for prime {p}")
            ideals.extend(ideal_power(q, row.e) for q in row.ideals)
    if not ideals:
        raise ValueError("empty ideal spec")
    return ideals


def _parse_raw_ideals(t, text: str):
    """Escape hatch: principal ideals from generator coefficient vectors.

    Each generator is semicolon-separated coefficient pairs 'a,b' per power
    of the tower generator; generators are separated by '|'.
    """
    ideals = []
    for gen_text in text.split("|"):
        coeffs = []
        for pair in gen_text.split(";"):
            a_text, b_text = pair.split(",")
            coeffs.append((int(a_text), int(b_text)))
        ideals.append(principal_ideal(t, t.element(coeffs)))
    return ideals


def _load_config_file(path: str) -> dict[str, str]:
    values = {}
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"config line without '=': {line!r}")
        key, _, value = line.partition("=")
        values[key.strip().replace("-", "_")] = value.strip()
    return values


def _apply_config_file(args: argparse.Namespace) -> None:
    if not getattr(args, "config", None):
        return
    for key, value in _load_config_file(args.config).items():
        if not hasattr(args, key):
            raise ValueError(f"unknown config key {key!r}")
        if getattr(args, key) is None:
            setattr(args, key, value)


def _build_code_from_args(t, args) -> LsticCode:
    if getattr(args, "raw_ideals", None):
        return build_code(t, _parse_raw_ideals(t, args.raw_ideals))
    if not args.ideals:
        raise ValueError("--ideals (or raw-ideals in a config file) is required")
    return build_code(t, _parse_ideal_spec(t, args.ideals))


def _side_info_from_args(code: LsticCode, args) -> SideInfoConfig | None:
    if args.side_info is None:
        return None
    subset = _parse_subset(str(args.side_info))
    return SideInfoConfig.random(code, subset, seed=int(args.side_info_seed))


def _write_manifest(args, command: str, outputs: list[str]) -> None:
    target = getattr(args, "manifest", None)
    if target is None:
        target = (outputs[0] + ".manifest.json") if outputs else "lstic-manifest.json"
    resolved = {
        k: v for k, v in sorted(vars(args).items()) if k not in {"func", "manifest"}
    }
    manifest = {
        "command": command,
        "argv": sys.argv[1:],
        "config": resolved,
        "family": getattr(args, "family", None),
        "seed": getattr(args, "seed", None),
        "version": __version__,
        "outputs": outputs,
    }
    Path(target).write_text(json.dumps(manifest, indent=1, default=str) + "\n")


def _db(x: Fraction) -> float:
    return 10.0 * (math.log10(x.numerator) - math.log10(x.denominator))


def _cmd_verify_tables(args) -> int:
    t = load_tower(args.family)
    rows = table_rows(t)
    if args.prime is not None:
        rows = [row for row in rows if row.p == args.prime]
        if not rows:
            print(f"no table row for prime {args.prime}", file=sys.stderr)
            return 1
    failures = 0
    for row in rows:
        try:
            verify_prime_factorization(t, row.p, row.ideals, row.e, row.f)
        except LsticError as exc:
            failures += 1
            print(f"p={row.p:3d} FAIL {exc}")
        else:
            print(f"p={row.p:3d} ok  e={row.e} f={row.f} g={len(row.ideals)}")
    print(f"{len(rows)} rows, {failures} failures")
    _write_manifest(args, "verify-tables", [])
    return 1 if failures else 0


def _format_report(rep) -> str:
    lines = [
        f"subset          {','.join(str(s) for s in rep.subset)}",
        f"method          {rep.method}",
        f"ratio           {rep.ratio} ({_db(rep.ratio):.4f} dB)",
    ]
    if rep.delta_full is not None:
        lines += [
            f"delta_full      {rep.delta_full} ({_db(rep.delta_full):.4f} dB)",
            f"delta_sub       {rep.delta_sub} ({_db(rep.delta_sub):.4f} dB)",
            f"kissing_full    {rep.kissing_full}",
            f"kissing_sub     {rep.kissing_sub}",
            f"predicted_gain  {rep.predicted_gain_db:.4f} dB (n_rx={rep.n_rx})",
        ]
    lines += [
        f"subset_rate     {rep.subset_rate:.6f} bits/real symbol",
        f"gamma           {rep.gamma_db:.6f} dB per bit/real symbol",
        f"bound           {rep.bound_db:.6f} dB (satisfied: {'yes' if rep.satisfied else 'no'})",
    ]
    return "\n".join(lines)


def _cmd_analyze(args) -> int:
    t = load_tower(args.family)
    code = _build_code_from_args(t, args)
    if args.side_info is None:
        raise ValueError("--side-info is required for analyze")
    subset = _parse_subset(str(args.side_info))
    extra = {} if args.budget is None else {"budget": args.budget}
    rep = side_info_gain(code, subset=subset, n_rx=args.n_rx, method=args.method, **extra)
    text = _format_report(rep)
    print(text)
    outputs = []
    if args.out:
        Path(args.out).write_text(text + "\n")
        outputs.append(args.out)
    _write_manifest(args, "analyze", outputs)
    return 0


def _cmd_simulate(args) -> int:
    t = load_tower(args.family)
    code = _build_code_from_args(t, args)
    cfg = SimConfig(
        code=code,
        snr_db=args.snr,
        trials=args.trials,
        seed=args.seed,
        side_info=_side_info_from_args(code, args),
        n_rx=args.n_rx,
        stop_errors=args.stop_errors,
        ml_cap=args.ml_cap,
    )
    curve = simulate_cer(cfg)
    write_csv(curve, args.out)
    for p in curve.points:
        print(f"snr={p.snr_db:6.2f} trials={p.trials:9d} errors={p.errors:7d} cer={p.cer:.4e}")
    _write_manifest(args, "simulate", [args.out])
    return 0


def _cmd_predict(args) -> int:
    t = load_tower(args.family)
    code = _build_code_from_args(t, args)
    info = _side_info_from_args(code, args)
    extra = {} if args.budget is None else {"budget": args.budget}
    rows = ["snr_db,cer"]
    for snr in args.snr:
        cer = predict_cer(code, snr, n_rx=args.n_rx, config=info, **extra)
        rows.append(f"{snr:g},{cer:.12e}")
        print(f"snr={snr:6.2f} predicted_cer={cer:.4e}")
    outputs = []
    if args.out:
        Path(args.out).write_text("\n".join(rows) + "\n")
        outputs.append(args.out)
    _write_manifest(args, "predict", outputs)
    return 0


def _cmd_report(args) -> int:
    full = read_csv(args.full)
    sub = read_csv(args.sub)
    gain = measure_gain(full, sub, args.target)
    text = (
        f"target_cer      {args.target:g}\n"
        f"gain            {gain:.4f} dB\n"
        f"curve_a         {args.full} ({len(full.points)} points)\n"
        f"curve_b         {args.sub} ({len(sub.points)} points)"
    )
    print(text)
    outputs = []
    if args.out:
        Path(args.out).write_text(text + "\n")
        outputs.append(args.out)
    _write_manifest(args, "report", outputs)
    return 0


def _add_code_options(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--family", required=True, choices=FAMILIES)
    sub.add_argument("--ideals", help="table rows: 'p' or 'p:i', comma separated")
    sub.add_argument("--raw-ideals", help="principal ideal generators (escape hatch)")
    sub.add_argument("--side-info", default=None, help="revealed layer-ideal indices, e.g. '0' or '0,1'")
    sub.add_argument("--side-info-seed", type=int, default=0)
    sub.add_argument("--config", help="key=value file supplying defaults for omitted flags")
    sub.add_argument("--manifest", help="manifest path (default: next to the primary output)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lstic",
        description="Layered space-time index codes: exact analysis and simulation.",
    )
    parser.add_argument("--version", action="version", version=f"lstic {__version__}")
    commands = parser.add_subparsers(dest="command", required=True)

    p = commands.add_parser("verify-tables", help="check the prime factorization tables")
    p.add_argument("--family", required=True, choices=FAMILIES)
    p.add_argument("--prime", type=int, default=None)
    p.add_argument("--manifest", help="manifest path")
    p.set_defaults(func=_cmd_verify_tables)

    p = commands.add_parser("analyze", help="exact side-information gain report")
    _add_code_options(p)
    p.add_argument("--method", choices=("enumerate", "algebraic"), default="enumerate")
    p.add_argument("--n-rx", type=int, default=2)
    p.add_argument("--budget", type=int, default=None)
    p.add_argument("--out", help="also write the report to this file")
    p.set_defaults(func=_cmd_analyze)

    p = commands.add_parser("simulate", help="Monte Carlo CER curve")
    _add_code_options(p)
    p.add_argument("--snr", required=True, type=_parse_snr, help="a:step:b or comma list, in dB")
    p.add_argument("--trials", required=True, type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n-rx", type=int, default=2)
    p.add_argument("--stop-errors", type=int, default=None)
    p.add_argument("--ml-cap", type=int, default=100_000)
    p.add_argument("--out", required=True, help="CSV output path")
    p.set_defaults(func=_cmd_simulate)

    p = commands.add_parser("predict", help="union-bound CER curve")
    _add_code_options(p)
    p.add_argument("--snr", required=True, type=_parse_snr)
    p.add_argument("--n-rx", type=int, default=2)
    p.add_argument("--budget", type=int, default=None)
    p.add_argument("--out", help="CSV output path")
    p.set_defaults(func=_cmd_predict)

    p = commands.add_parser("report", help="measure the dB gain between two curves")
    p.add_argument("--full", required=True, help="CSV of the unassisted curve")
    p.add_argument("--sub", required=True, help="CSV of the side-information curve")
    p.add_argument("--target", required=True, type=float, help="CER at which to read the gain")
    p.add_argument("--out", help="also write the report to this file")
    p.add_argument("--manifest", help="manifest path")
    p.set_defaults(func=_cmd_report)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _apply_config_file(args)
        if args.command == "simulate" and not args.snr:
            parser.error("SNR grid is empty")
        return args.func(args)
    except LsticError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        parser.error(str(exc))
        return 2


if __name__ == "__main__":
    sys.exit(main())
