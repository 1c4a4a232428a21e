"""CSV, SVG and key=value config serialization for case results and sweeps."""

from __future__ import annotations

import csv
import dataclasses
import math
from pathlib import Path

import numpy as np

from .harness import CASES, FAMILIES, CaseResult, ExperimentConfig
from .spectrum import SpectrumSweep

CSV_HEADER = (
    "case",
    "family",
    "order",
    "nmse_noisy_mean",
    "nmse_noisefree_mean",
    "inv_sigma_min",
    "theta_star_norm",
)


def _fmt(v) -> str:
    # repr of a Python float is the shortest string that round-trips
    if v is None:
        return ""
    return repr(float(v))


def _parse(s: str):
    return None if s == "" else float(s)


def case_rows(result: CaseResult):
    for family in FAMILIES:
        curves = result[family]
        noisy = curves.nmse_noisy_mean
        clean = curves.nmse_noisefree_mean
        for j, n in enumerate(result.orders):
            yield (
                result.config.case_id,
                family,
                int(n),
                noisy[j],
                clean[j],
                curves.inv_sigma_min[j],
                curves.theta_star_norm[j],
            )


def spectrum_rows(sweep: SpectrumSweep):
    for j, n in enumerate(sweep.orders):
        tnorm = None if sweep.theta_star_norm is None else sweep.theta_star_norm[j]
        yield ("spectrum", sweep.family, int(n), None, None, sweep.inv_sigma_min[j], tnorm)


def _write_rows(rows, path):
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for case, family, order, *vals in rows:
            w.writerow([case, family, order, *(_fmt(v) for v in vals)])
    return path


def write_csv(result: CaseResult, path) -> Path:
    return _write_rows(case_rows(result), path)


def write_spectrum_csv(sweep: SpectrumSweep, path) -> Path:
    return _write_rows(spectrum_rows(sweep), path)


def read_csv(path) -> list[dict]:
    """Parse a file written by :func:`write_csv`; empty cells become ``None``."""
    with Path(path).open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != CSV_HEADER:
            raise ValueError(f"unexpected CSV header {reader.fieldnames}")
        rows = []
        for rec in reader:
            row = {"case": rec["case"], "family": rec["family"], "order": int(rec["order"])}
            for key in CSV_HEADER[3:]:
                row[key] = _parse(rec[key])
            rows.append(row)
    return rows


def _plot(path, title, ylabel, series):
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    with matplotlib.rc_context({"svg.hashsalt": "descent-lab", "svg.fonttype": "path"}):
        fig, ax = plt.subplots(figsize=(6.4, 4.0))
        for label, x, y, style in series:
            y = np.asarray(y, dtype=float)
            mask = np.isfinite(y) & (y > 0)
            ax.plot(np.asarray(x)[mask], y[mask], style, label=label, markersize=3)
        ax.set_yscale("log")
        ax.set_xlabel("model order n")
        ax.set_ylabel(ylabel)
        ax.set_title(title)
        ax.grid(True, which="both", alpha=0.3)
        if len(series) > 1:
            ax.legend()
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
    return Path(path)


def emit_svg(obj, path, family: str | None = None) -> Path:
    """Log-scale line chart of a case family's NMSE curves or a sweep's 1/sigma_min."""
    if isinstance(obj, SpectrumSweep):
        return _plot(path, f"{obj.family} ordering", "1 / sigma_min", [("1/sigma_min", obj.orders, obj.inv_sigma_min, "o-")])
    if isinstance(obj, CaseResult):
        if family not in FAMILIES:
            raise ValueError(f"family must be one of {FAMILIES}")
        c = obj[family]
        return _plot(
            path,
            f"case {obj.config.case_id}, {family} ordering",
            "NMSE",
            [
                ("noisy data", obj.orders, c.nmse_noisy_mean, "o-"),
                ("noise-free data", obj.orders, c.nmse_noisefree_mean, "s--"),
            ],
        )
    raise TypeError(f"cannot plot {type(obj).__name__}")


_KEY_ALIASES = {"lambda": "lam", "seed": "base_seed", "case": "case_id", "generator": "generator_kind"}
_INT_KEYS = {"N", "n_max", "replicates", "base_seed"}
_FLOAT_KEYS = {"epsilon", "r_z"}


def _convert(key: str, value: str):
    if key in _INT_KEYS:
        return int(value)
    if key in _FLOAT_KEYS:
        return float(value)
    if key == "lam":
        return None if value.lower() in ("", "none", "0", "0.0") else float(value)
    return value


def read_config_values(text: str) -> dict:
    """Typed values from ``key=value`` lines; ``#`` starts a comment."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"config line {lineno}: expected key=value, got {raw!r}")
        key, value = (p.strip() for p in line.split("=", 1))
        key = _KEY_ALIASES.get(key, key)
        try:
            values[key] = _convert(key, value)
        except ValueError as exc:
            raise ValueError(f"config line {lineno}: bad value for {key}: {value!r}") from exc
    return values


def parse_config_text(text: str, overrides: dict | None = None) -> ExperimentConfig:
    """Build a config from ``key=value`` lines; ``overrides`` win over file values.

    Named cases A-D fill in their table defaults, so a file may contain just
    ``case_id=A``. Custom case ids must give ``epsilon`` and ``generator_kind``.
    """
    values = read_config_values(text)
    values.update(overrides or {})
    return config_from_values(values)


def config_from_values(values: dict) -> ExperimentConfig:
    values = dict(values)
    case_id = str(values.pop("case_id", "")).strip()
    if not case_id:
        raise ValueError("config needs a case_id")
    names = {f.name for f in dataclasses.fields(ExperimentConfig)}
    unknown = set(values) - names
    if unknown:
        raise ValueError(f"unknown config keys: {', '.join(sorted(unknown))}")
    if case_id.upper() in CASES:
        return ExperimentConfig.for_case(case_id).replace(**values)
    missing = {"epsilon", "generator_kind"} - set(values)
    if missing:
        raise ValueError(f"custom case {case_id!r} needs {', '.join(sorted(missing))}")
    return ExperimentConfig(case_id=case_id, **values)


def format_config_text(cfg: ExperimentConfig) -> str:
    lines = []
    for f in dataclasses.fields(cfg):
        v = getattr(cfg, f.name)
        if v is None:
            text = "none"
        elif isinstance(v, float):
            text = repr(v) if math.isfinite(v) else str(v)
        else:
            text = str(v)
        lines.append(f"{f.name}={text}")
    return "\n".join(lines) + "\n"
