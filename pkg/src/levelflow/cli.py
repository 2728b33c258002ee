"""Command-line front end: simulate | density | sweep | fit.

Emits CSV or JSON tables for plotting.  Every output file starts with a
header block holding the resolved science configuration, and all numbers
are serialized with 17 significant digits, so a fixed seed reproduces
files bit for bit regardless of the worker count (the --jobs flag is an
execution detail and deliberately kept out of file headers).

Exit codes: 0 success, 1 validation error, 2 numerical error, 3 I/O
error.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .ensemble import DEFAULT_ALPHA, epsilon_lambda
from .errors import LevelflowError, ValidationError
from .pipeline import ArmParams, arm_summary, pooled_eigenvalues, run_arm
from .statistics import (
    Histogram,
    build_histogram,
    fit_gamma,
    gamma_pdf,
    ks_statistic,
    model_bin_density,
    reduced_chi_square,
    universal_pdf,
)
from .unfolding import mean_density

DEFAULT_SWEEP = (0.0, 0.32, 1.0, 3.2, 10.0)
DEFAULT_CURVATURE_BINS = "41:-5:5"

_CONFIG_KEYS = (
    "n",
    "m",
    "alpha",
    "epsilon",
    "realizations",
    "t_samples",
    "seed",
    "window",
    "bins",
    "out",
    "format",
    "jobs",
)


@dataclass
class RunConfig:
    """Resolved simulation configuration shared by the run commands."""

    n: int = 100
    m: int | None = None
    alpha: float = DEFAULT_ALPHA
    epsilon: tuple = ()
    realizations: int = 100
    t_samples: int = 4
    seed: int = 0
    window: float = 0.5
    bins: str = DEFAULT_CURVATURE_BINS
    out: str = ""
    format: str = "csv"
    jobs: int = 0

    def __post_init__(self):
        if self.m is None:
            self.m = self.n // 2
        if self.n < 2:
            raise ValidationError(f"dimension must be >= 2, got {self.n}")
        if not 1 <= self.m < self.n:
            raise ValidationError(f"block size must satisfy 1 <= m < n, got {self.m}")
        if not self.alpha > 0:
            raise ValidationError(f"alpha must be positive, got {self.alpha}")
        if self.realizations < 1:
            raise ValidationError(f"realizations must be >= 1, got {self.realizations}")
        if self.t_samples < 1:
            raise ValidationError(f"t-samples must be >= 1, got {self.t_samples}")
        if not 0.0 < self.window <= 1.0:
            raise ValidationError(f"window must lie in (0, 1], got {self.window}")
        if self.format not in ("csv", "json"):
            raise ValidationError(f"format must be csv or json, got {self.format!r}")
        if self.jobs < 0:
            raise ValidationError(f"jobs must be >= 0, got {self.jobs}")
        if self.jobs == 0:
            self.jobs = os.cpu_count() or 1
        # Every epsilon must map into a legal coupling for this dimension.
        for eps in self.epsilon:
            epsilon_lambda(self.n, eps, "to_lambda")

    def arm(self, eps_index: int) -> ArmParams:
        return ArmParams(
            n=self.n,
            m=self.m,
            alpha=self.alpha,
            lam=epsilon_lambda(self.n, self.epsilon[eps_index], "to_lambda"),
            seed=self.seed,
            eps_index=eps_index,
            t_samples=self.t_samples,
            window_fraction=self.window,
        )

    def header_dict(self, eps_index: int | None = None) -> dict:
        """Science configuration for file headers (execution knobs excluded)."""
        out = {
            "n": self.n,
            "m": self.m,
            "alpha": self.alpha,
            "epsilon_list": list(self.epsilon),
            "realizations": self.realizations,
            "t_samples": self.t_samples,
            "seed": self.seed,
            "window": self.window,
            "bins": self.bins,
        }
        if eps_index is not None:
            eps = self.epsilon[eps_index]
            out["epsilon"] = eps
            out["lambda"] = epsilon_lambda(self.n, eps, "to_lambda")
        return out


# ---------------------------------------------------------------------------
# serialization helpers


def format_float(x: float) -> str:
    return format(float(x), ".17g")


def dumps_json(value) -> str:
    """Deterministic JSON with floats at 17 significant digits."""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if value is None:
        return "null"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format_float(value)
    if isinstance(value, str):
        return '"' + value.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(value, dict):
        items = ", ".join(f"{dumps_json(str(k))}: {dumps_json(v)}" for k, v in value.items())
        return "{" + items + "}"
    if isinstance(value, (list, tuple, np.ndarray)):
        return "[" + ", ".join(dumps_json(v) for v in value) + "]"
    raise TypeError(f"cannot serialize {type(value)!r}")


def _header_lines(command: str, config: dict) -> list:
    lines = [f"# levelflow {command}"]
    for key, val in config.items():
        if isinstance(val, float):
            val = format_float(val)
        elif isinstance(val, (list, tuple)):
            val = ",".join(format_float(v) if isinstance(v, float) else str(v) for v in val)
        lines.append(f"# {key} = {val}")
    return lines


def write_table(path, fmt: str, command: str, config: dict, columns, rows, summary=None):
    """Write one output table; CSV gets a commented header block, JSON mirrors it."""
    path = Path(path)
    if fmt == "csv":
        lines = _header_lines(command, config)
        lines.append(",".join(columns))
        for row in rows:
            lines.append(",".join(format_float(v) for v in row))
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    else:
        payload = {
            "command": command,
            "config": config,
            "columns": list(columns),
            "rows": [list(map(float, row)) for row in rows],
        }
        if summary is not None:
            payload["summary"] = summary
        path.write_text(dumps_json(payload) + "\n", encoding="utf-8")


def write_summary(path, summary: dict):
    Path(path).write_text(dumps_json(summary) + "\n", encoding="utf-8")


def parse_bin_spec(spec: str, default_range=None):
    """Parse 'COUNT' or 'COUNT:LO:HI' into bin edges."""
    parts = spec.split(":")
    if len(parts) not in (1, 3):
        raise ValidationError(f"cannot parse bin spec {spec!r}; use COUNT or COUNT:LO:HI")
    try:
        count = int(parts[0])
        lo, hi = (float(parts[1]), float(parts[2])) if len(parts) == 3 else (None, None)
    except ValueError as exc:
        raise ValidationError(f"cannot parse bin spec {spec!r}; use COUNT or COUNT:LO:HI") from exc
    if lo is None:
        if default_range is None:
            raise ValidationError(
                f"bin spec {spec!r} gives no range and the command has no natural one"
            )
        lo, hi = default_range
    if count < 1:
        raise ValidationError(f"bin count must be >= 1, got {count}")
    if not lo < hi:
        raise ValidationError(f"bin range must be increasing, got [{lo}, {hi}]")
    return np.linspace(lo, hi, count + 1)


# ---------------------------------------------------------------------------
# commands


def _eps_path(out: str, eps: float, multi: bool) -> Path:
    path = Path(out)
    if not multi:
        return path
    return path.with_name(f"{path.stem}_eps{eps:g}{path.suffix}")


SAMPLE_COLUMNS = ("realization", "level", "t", "E", "Edot", "Eddot", "xdot", "xddot", "K", "k")
HIST_COLUMNS = ("bin_lo", "bin_hi", "count", "density", "model_density")


def _batch_rows(batch):
    return np.column_stack(
        [
            batch.realization,
            batch.level,
            batch.t,
            batch.energy,
            batch.raw_velocity,
            batch.raw_curvature,
            batch.unfolded_velocity,
            batch.unfolded_curvature,
            batch.rescaled,
            batch.normalized,
        ]
    )


def _print_arm(summary: dict):
    tail = summary["tail_exponent"]
    tail_text = f"{tail:.3f}" if tail is not None else "n/a"
    print(
        f"epsilon={summary['epsilon']:g} lambda={summary['lambda']:g} "
        f"samples={summary['n_samples']} mean|K|={summary['mean_abs_rescaled']:.6f} "
        f"KS={summary['ks_vs_universal']:.4f} tail={tail_text}"
        + (" [per-block]" if summary["per_block"] else "")
    )


def cmd_simulate(config: RunConfig) -> int:
    """Sample curvature batches for each epsilon and write sample tables."""
    if not config.epsilon:
        raise ValidationError("simulate needs at least one --epsilon value")
    multi = len(config.epsilon) > 1
    out = config.out or f"samples.{config.format}"
    for i, eps in enumerate(config.epsilon):
        arm = config.arm(i)
        batch, info = run_arm(arm, config.realizations, config.jobs)
        summary = arm_summary(arm, batch, info)
        path = _eps_path(out, eps, multi)
        write_table(
            path,
            config.format,
            "simulate",
            config.header_dict(i),
            SAMPLE_COLUMNS,
            _batch_rows(batch),
            summary=summary,
        )
        write_summary(str(path) + ".summary.json", summary)
        _print_arm(summary)
        print(f"wrote {path}")
    return 0


def cmd_density(config: RunConfig) -> int:
    """Pool eigenvalues of one arm and compare them with the semicircle law."""
    if len(config.epsilon) != 1:
        raise ValidationError("density needs exactly one --epsilon value")
    arm = config.arm(0)
    model = arm.density_model()
    edges = parse_bin_spec(config.bins, default_range=(-model.radius, model.radius))
    eigenvalues = pooled_eigenvalues(arm, config.realizations, config.jobs)
    hist = build_histogram(eigenvalues, edges)
    model_density = np.asarray(mean_density(model, hist.centers)) / config.n
    rows = np.column_stack([edges[:-1], edges[1:], hist.counts, hist.density, model_density])

    expected = model_density * hist.widths * hist.total
    keep = expected >= 1.0
    chi2 = float(np.sum((hist.counts[keep] - expected[keep]) ** 2 / expected[keep]))
    dof = max(int(np.sum(keep)) - 1, 1)
    outside = hist.underflow + hist.overflow
    summary = {
        "epsilon": config.epsilon[0],
        "lambda": arm.lam,
        "radius": model.radius,
        "eigenvalues": int(len(eigenvalues)),
        "outside_support": int(outside),
        "outside_fraction": outside / len(eigenvalues),
        "chi_square_per_dof": chi2 / dof,
    }
    out = config.out or f"density.{config.format}"
    write_table(
        out, config.format, "density", config.header_dict(0), HIST_COLUMNS, rows, summary=summary
    )
    write_summary(str(out) + ".summary.json", summary)
    print(
        f"epsilon={summary['epsilon']:g} eigenvalues={summary['eigenvalues']} "
        f"outside={summary['outside_fraction']:.5f} chi2/dof={summary['chi_square_per_dof']:.3f}"
    )
    print(f"wrote {out}")
    return 0


def cmd_sweep(config: RunConfig) -> int:
    """Run the epsilon sweep and emit per-arm histograms plus an overlay table."""
    if len(config.epsilon) < 2:
        raise ValidationError("sweep needs at least two --epsilon values; use simulate for one")
    out_dir = Path(config.out or "sweep_out")
    out_dir.mkdir(parents=True, exist_ok=True)
    edges = parse_bin_spec(config.bins, default_range=(-5.0, 5.0))
    centers = 0.5 * (edges[:-1] + edges[1:])
    reference = model_bin_density(edges, 1.0)
    overlay = [centers, reference]
    overlay_columns = ["bin_center", "universal_density"]
    summaries = []
    for i, eps in enumerate(config.epsilon):
        arm = config.arm(i)
        batch, info = run_arm(arm, config.realizations, config.jobs)
        summaries.append(arm_summary(arm, batch, info))
        hist = build_histogram(batch.normalized, edges)
        rows = np.column_stack([edges[:-1], edges[1:], hist.counts, hist.density, reference])
        write_table(
            out_dir / f"hist_eps{eps:g}.{config.format}",
            config.format,
            "sweep",
            config.header_dict(i),
            HIST_COLUMNS,
            rows,
            summary=summaries[-1],
        )
        overlay.append(hist.density)
        overlay_columns.append(f"density_eps{eps:g}")
        _print_arm(summaries[-1])
    write_table(
        out_dir / f"overlay.{config.format}",
        config.format,
        "sweep",
        config.header_dict(),
        overlay_columns,
        np.column_stack(overlay),
    )
    write_summary(out_dir / "summary.json", {"arms": summaries})
    print(f"wrote {out_dir}")
    return 0


def _read_fit_input(path: str, kind: str):
    """Raw curvature samples or (position, density) pairs from a text file."""
    values = []
    pairs = []
    with open(path, "r", encoding="utf-8") as handle:
        for lineno, raw in enumerate(handle, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            fields = line.replace(",", " ").split()
            try:
                numbers = [float(f) for f in fields]
            except ValueError as exc:
                raise ValidationError(f"{path}: line {lineno}: cannot parse {line!r}") from exc
            if kind == "samples":
                if len(numbers) != 1:
                    raise ValidationError(
                        f"{path}: line {lineno}: expected one value per line, got {len(numbers)}"
                    )
                values.append(numbers[0])
            else:
                if len(numbers) != 2:
                    raise ValidationError(
                        f"{path}: line {lineno}: expected 'position density', got {len(numbers)} fields"
                    )
                pairs.append(numbers)
    return values if kind == "samples" else pairs


def _histogram_from_pairs(pairs) -> Histogram:
    """Histogram carrier for externally binned (center, density) tables.

    Centers must be uniformly spaced; counts are unknown and stored as
    zeros, so only density-based operations apply to the result.
    """
    if len(pairs) < 2:
        raise ValidationError("binned input needs at least two (position, density) rows")
    arr = np.asarray(pairs, dtype=float)
    centers, density = arr[:, 0], arr[:, 1]
    if np.any(np.diff(centers) <= 0):
        raise ValidationError("binned input positions must be strictly ascending")
    steps = np.diff(centers)
    if np.max(steps) - np.min(steps) > 1e-6 * np.mean(steps):
        raise ValidationError("binned input positions must be uniformly spaced")
    width = float(np.mean(steps))
    edges = np.concatenate([centers - width / 2.0, [centers[-1] + width / 2.0]])
    return Histogram(
        edges=edges,
        counts=np.zeros(len(centers), dtype=int),
        total=0,
        underflow=0,
        overflow=0,
        density=density,
    )


def cmd_fit(args) -> int:
    """Fit the one-parameter curvature law to an external data file."""
    kind = args.input_kind
    data = _read_fit_input(args.input, kind)
    if kind == "samples":
        if len(data) < 10:
            raise ValidationError(f"only {len(data)} samples in {args.input}; need at least 10")
        samples = np.asarray(data, dtype=float)
        edges = parse_bin_spec(args.bins, default_range=(-5.0, 5.0))
        # Non-truncated normalization keeps the binned density an unbiased
        # estimate of the underlying density on the range, which the
        # least-squares fit needs to recover gamma without tail bias.
        hist = build_histogram(samples, edges, truncated=False)
    else:
        samples = None
        hist = _histogram_from_pairs(data)
    fit = fit_gamma(hist)
    print(f"gamma = {fit.gamma:.6g} +/- {fit.gamma_uncertainty:.2g}")
    print(f"objective = {fit.objective:.6g} (mean squared density residual, {fit.bins_used} bins)")
    if samples is not None:
        print(f"reduced chi-square = {reduced_chi_square(hist, fit.gamma):.4g}")
        print(f"KS vs fitted model = {ks_statistic(samples, fit.gamma):.4g}")
        print(f"KS vs universal    = {ks_statistic(samples, 1.0):.4g}")
    if args.out:
        grid = np.linspace(hist.edges[0], hist.edges[-1], 201)
        rows = np.column_stack([grid, gamma_pdf(grid, fit.gamma), universal_pdf(grid)])
        config = {
            "input": args.input,
            "input_kind": kind,
            "gamma": fit.gamma,
            "gamma_uncertainty": fit.gamma_uncertainty,
            "objective": fit.objective,
        }
        write_table(
            args.out,
            args.format,
            "fit",
            config,
            ("K", "fitted_density", "universal_density"),
            rows,
        )
        print(f"wrote {args.out}")
    return 0


# ---------------------------------------------------------------------------
# argument parsing


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would exit(2); keep our exit-code contract
        raise ValidationError(message)


def _add_run_flags(parser):
    parser.add_argument("--config", help="key = value file; command-line flags override it")
    parser.add_argument("--n", type=int, help="matrix dimension (default 100)")
    parser.add_argument("--m", type=int, help="first-block dimension (default n//2)")
    parser.add_argument("--alpha", type=float, help="gaussian scale (default 0.5)")
    parser.add_argument(
        "--epsilon", type=float, nargs="+", help="scaled coupling values sqrt(n)*lambda"
    )
    parser.add_argument("--realizations", type=int, help="matrix pairs per epsilon (default 100)")
    parser.add_argument("--t-samples", type=int, help="path positions per pair (default 4)")
    parser.add_argument("--seed", type=int, help="base RNG seed (default 0)")
    parser.add_argument("--window", type=float, help="central level fraction kept (default 0.5)")
    parser.add_argument("--bins", help="bin spec COUNT or COUNT:LO:HI")
    parser.add_argument("--out", help="output path (directory for sweep)")
    parser.add_argument("--format", choices=("csv", "json"), help="output format (default csv)")
    parser.add_argument("--jobs", type=int, help="worker processes (default: all cores)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="levelflow", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, helptext in (
        ("simulate", "curvature samples and summary per epsilon"),
        ("density", "pooled eigenvalue histogram vs the semicircle law"),
        ("sweep", "normalized-curvature histograms across an epsilon list"),
    ):
        p = sub.add_parser(name, help=helptext)
        _add_run_flags(p)
    fit = sub.add_parser("fit", help="fit the one-parameter curvature law to a data file")
    fit.add_argument("--input", required=True, help="data file to fit")
    fit.add_argument(
        "--input-kind",
        choices=("samples", "binned"),
        default="samples",
        help="samples: one value per line; binned: 'position density' rows",
    )
    fit.add_argument("--bins", default=DEFAULT_CURVATURE_BINS, help="bin spec for samples input")
    fit.add_argument("--out", help="optional fitted-curve table")
    fit.add_argument("--format", choices=("csv", "json"), default="csv")
    return parser


def _read_config_file(path: str) -> dict:
    values = {}
    with open(path, "r", encoding="utf-8") as handle:
        for lineno, raw in enumerate(handle, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValidationError(f"{path}: line {lineno}: expected 'key = value'")
            key, _, value = line.partition("=")
            key = key.strip().replace("-", "_")
            if key not in _CONFIG_KEYS:
                raise ValidationError(f"{path}: line {lineno}: unknown key {key!r}")
            values[key] = value.strip()
    return values


def _config_from_args(args) -> RunConfig:
    file_values = _read_config_file(args.config) if args.config else {}

    def pick(name, cast, default):
        cli = getattr(args, name)
        if cli is not None:
            return cli
        if name in file_values:
            try:
                return cast(file_values[name])
            except ValueError as exc:
                raise ValidationError(f"config key {name!r}: {exc}") from exc
        return default

    def cast_epsilon(text: str):
        return tuple(float(tok) for tok in text.replace(",", " ").split())

    epsilon = pick("epsilon", cast_epsilon, None)
    if epsilon is None:
        epsilon = DEFAULT_SWEEP if args.command == "sweep" else ()
    default_bins = "41" if args.command == "density" else DEFAULT_CURVATURE_BINS
    return RunConfig(
        n=pick("n", int, 100),
        m=pick("m", int, None),
        alpha=pick("alpha", float, DEFAULT_ALPHA),
        epsilon=tuple(epsilon),
        realizations=pick("realizations", int, 100),
        t_samples=pick("t_samples", int, 4),
        seed=pick("seed", int, 0),
        window=pick("window", float, 0.5),
        bins=pick("bins", str, default_bins),
        out=pick("out", str, ""),
        format=pick("format", str, "csv"),
        jobs=pick("jobs", int, 0),
    )


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "fit":
            return cmd_fit(args)
        config = _config_from_args(args)
        if args.command == "simulate":
            return cmd_simulate(config)
        if args.command == "density":
            return cmd_density(config)
        return cmd_sweep(config)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except LevelflowError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 3


def console_main():
    sys.exit(main())


if __name__ == "__main__":
    console_main()
