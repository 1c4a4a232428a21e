"""Command-line front end: ``descent-lab run|spectrum|interlace``."""

from __future__ import annotations

import argparse
import datetime as _dt
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .harness import ALPHA_MODES, FAMILIES, run_case
from .linalg import SvdConvergenceError
from .reporting import (
    config_from_values,
    emit_svg,
    format_config_text,
    read_config_values,
    write_csv,
    write_spectrum_csv,
)
from .spectrum import sweep_spectrum, verify_interlacing
from .structures import DataGenerator, family_builder, regression_matrix, sample_alpha, substream

SEED_ENV = "DESCENT_LAB_SEED"

log = logging.getLogger("descent_lab")


class CliError(Exception):
    pass


def _env_seed():
    raw = os.environ.get(SEED_ENV)
    if raw is None or raw.strip() == "":
        return None
    try:
        return int(raw)
    except ValueError:
        raise CliError(f"{SEED_ENV} must be an integer, got {raw!r}") from None


def _resolve_seed(flag, file_value=None):
    if flag is not None:
        return flag
    if file_value is not None:
        return file_value
    env = _env_seed()
    return env if env is not None else 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="descent-lab", description="Minimum-norm regression and double descent experiments.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one experiment case (A-D) or a config file")
    src = run.add_mutually_exclusive_group(required=True)
    src.add_argument("--case", help="case id A, B, C or D")
    src.add_argument("--config", type=Path, help="key=value config file")
    run.add_argument("--seed", type=int, help=f"base seed (falls back to ${SEED_ENV}, then 0)")
    run.add_argument("--replicates", type=int)
    run.add_argument("--lambda", dest="lam", type=float, help="ridge parameter; omit for minimum norm")
    run.add_argument("--epsilon", type=float)
    run.add_argument("--alpha-mode", choices=ALPHA_MODES)
    run.add_argument("--out", type=Path, default=Path("results"))
    run.add_argument("--no-plots", action="store_true")

    sweep = sub.add_parser("spectrum", help="1/sigma_min against model order")
    sweep.add_argument("--family", choices=FAMILIES + ("both",), default="both")
    sweep.add_argument("--N", type=int, default=10)
    sweep.add_argument("--nmax", type=int, default=30)
    sweep.add_argument("--generator", choices=("lin", "opt"), help="also report noise-free solution norms")
    sweep.add_argument("--seed", type=int)
    sweep.add_argument("--out", type=Path, default=Path("results"))
    sweep.add_argument("--no-plots", action="store_true")

    inter = sub.add_parser("interlace", help="randomized singular value interlacing check")
    inter.add_argument("--trials", type=int, default=500)
    inter.add_argument("--seed", type=int)
    inter.add_argument("--max-rows", type=int, default=20)
    inter.add_argument("--max-cols", type=int, default=30)
    inter.add_argument("--N", type=int, default=10)
    inter.add_argument("--nmax", type=int, default=30)
    inter.add_argument("--out", type=Path, help="write violations as CSV")
    return p


def _write_manifest(out: Path, name: str, payload: dict) -> Path:
    path = out / name
    payload = {
        "tool": "descent-lab",
        "version": __version__,
        "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
        **payload,
    }
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def cmd_run(args) -> int:
    overrides = {}
    if args.replicates is not None:
        overrides["replicates"] = args.replicates
    if args.lam is not None:
        overrides["lam"] = args.lam
    if args.epsilon is not None:
        overrides["epsilon"] = args.epsilon
    if args.alpha_mode is not None:
        overrides["alpha_mode"] = args.alpha_mode
    if args.config is not None:
        try:
            text = args.config.read_text(encoding="utf-8")
        except OSError as exc:
            raise CliError(f"cannot read config {args.config}: {exc.strerror}") from None
        values = read_config_values(text)
    else:
        values = {"case_id": args.case}
    values["base_seed"] = _resolve_seed(args.seed, values.get("base_seed"))
    values.update(overrides)
    cfg = config_from_values(values)

    out = args.out
    out.mkdir(parents=True, exist_ok=True)
    log.info("running case %s with %d replicates, seed %d", cfg.case_id, cfg.replicates, cfg.base_seed)
    result = run_case(cfg)
    stem = f"case{cfg.case_id}"
    outputs = [write_csv(result, out / f"{stem}.csv")]
    if not args.no_plots:
        for family in FAMILIES:
            outputs.append(emit_svg(result, out / f"{stem}_{family}.svg", family))
    manifest = out / f"{stem}_manifest.json"
    _write_manifest(
        out,
        manifest.name,
        {
            "command": "run",
            "base_seed": cfg.base_seed,
            "config": cfg.to_dict(),
            "config_text": format_config_text(cfg),
            "outputs": [str(p) for p in outputs] + [str(manifest)],
        },
    )
    for family in FAMILIES:
        if result[family].failures:
            log.warning("%s: SVD failed at orders %s", family, sorted(result[family].failures))
    print(f"wrote {len(outputs) + 1} files to {out}")
    return 0


def cmd_spectrum(args) -> int:
    if not 1 <= args.N <= args.nmax:
        raise CliError("need 1 <= N <= nmax")
    out = args.out
    out.mkdir(parents=True, exist_ok=True)
    seed = _resolve_seed(args.seed)
    x = np.arange(args.N, dtype=np.float64)
    gen = None
    if args.generator is not None:
        alpha = sample_alpha(substream(seed, "spectrum", 0))
        gen = DataGenerator(alpha, args.generator, args.nmax, args.N)
    families = FAMILIES if args.family == "both" else (args.family,)
    outputs = []
    for family in families:
        sweep = sweep_spectrum(family_builder(family, args.N, args.nmax), x, args.nmax, gen)
        outputs.append(write_spectrum_csv(sweep, out / f"spectrum_{family}.csv"))
        if not args.no_plots:
            outputs.append(emit_svg(sweep, out / f"spectrum_{family}.svg"))
        print(f"{family}: 1/sigma_min peaks at n={sweep.peak_order()} ({np.nanmax(sweep.inv_sigma_min):.6g})")
    manifest = out / "spectrum_manifest.json"
    _write_manifest(
        out,
        manifest.name,
        {
            "command": "spectrum",
            "base_seed": seed,
            "config": {"family": args.family, "N": args.N, "n_max": args.nmax, "generator": args.generator},
            "outputs": [str(p) for p in outputs] + [str(manifest)],
        },
    )
    return 0


def cmd_interlace(args) -> int:
    if args.trials < 0 or args.max_rows < 1 or args.max_cols < 1:
        raise CliError("trials must be >= 0 and matrix bounds >= 1")
    seed = _resolve_seed(args.seed)
    rng = np.random.default_rng(seed)
    failures = []
    checked = 0
    for trial in range(args.trials):
        rows = int(rng.integers(1, args.max_rows + 1))
        cols = int(rng.integers(1, args.max_cols + 1))
        a = rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))
        c = rng.standard_normal(rows) + 1j * rng.standard_normal(rows)
        verdict = verify_interlacing(a, c)
        checked += 1
        failures += [(f"random#{trial}", rows, cols, v) for v in verdict.violations]
    x = np.arange(args.N, dtype=np.float64)
    for family in FAMILIES:
        build = family_builder(family, args.N, args.nmax)
        for n in range(1, args.nmax):
            phi = regression_matrix(build(n), x)
            nxt = regression_matrix(build(n + 1), x)[:, -1]
            verdict = verify_interlacing(phi, nxt)
            checked += 1
            failures += [(f"{family}@{n}", args.N, n, v) for v in verdict.violations]
    if args.out is not None:
        args.out.parent.mkdir(parents=True, exist_ok=True)
        with args.out.open("w", encoding="utf-8", newline="") as fh:
            fh.write("instance,rows,cols,left,right,margin\n")
            for name, r, c, v in failures:
                fh.write(f"{name},{r},{c},{v.left},{v.right},{v.margin!r}\n")
    for name, r, c, v in failures:
        print(f"VIOLATION {name} ({r}x{c}): {v.left} >= {v.right} fails by {-v.margin:.3e}")
    print(f"checked {checked} column appends, {len(failures)} violations")
    return 1 if failures else 0


COMMANDS = {"run": cmd_run, "spectrum": cmd_spectrum, "interlace": cmd_interlace}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (CliError, ValueError, SvdConvergenceError) as exc:
        print(f"descent-lab: error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"descent-lab: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
