"""Command line front end.

Three subcommands, all driven by a JSON config file:

  mixreg simulate --config cfg.json --output-dir out [--format csv|json]
      Run a Monte Carlo experiment (canonical by "experiment": 1..4, or
      fully custom parameters) and write summary.csv / summary.json.

  mixreg estimate --config cfg.json --output-dir out [--em] [--bonferroni M]
      Estimate coefficients from a CSV dataset with header
      y,x1,...,xd,p1,...,pM and write per-component estimates, covariance
      matrices and ellipsoid descriptors.

  mixreg plot --config cfg.json --output-dir out
      Render the ellipsoids from an estimate run as an SVG (d = 2 only).

Exit codes: 0 success; 2 malformed config or CSV; 3 more than 5% of
replications failed (summary still written, flagged); 4 singular
concentration or design matrix; 5 plot requested for d != 2.

Component numbers in all outputs are 1-based, matching the usual tables;
the Python API is 0-based.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys

import numpy as np

from .ellipsoid import boundary_points, info_ellipsoid, ls_ellipsoid
from .emfit import EmConfig, em_fit, pilot_estimates
from .errors import MixregError, SingularDesign, SingularGram, UnsupportedDim
from .likelihood import empirical_info, info_subblock
from .lsfit import ls_fit_all
from .model import PROB_ROW_TOL, MixtureSample, unflatten, validate_sample
from .simlab import EXPERIMENT_PARAMS, ExperimentConfig, experiment_config, run_monte_carlo

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_FAILURES = 3
EXIT_SINGULAR = 4
EXIT_DIM = 5

#: significant digits for all serialized floats (lossless float64 round trip)
FLOAT_DIGITS = 17


def _fmt(x) -> str:
    return format(float(x), f".{FLOAT_DIGITS}g")


class ConfigError(Exception):
    pass


def _load_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON in {path}: {exc}") from exc


def _require(cfg: dict, field: str, types):
    if field not in cfg:
        raise ConfigError(f"config field {field!r} is missing")
    if not isinstance(cfg[field], types):
        raise ConfigError(f"config field {field!r} has the wrong type")
    return cfg[field]


def _threads(args) -> int:
    if args.threads is not None:
        return args.threads
    env = os.environ.get("MIXREG_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ConfigError(f"MIXREG_THREADS={env!r} is not an integer")
    return os.cpu_count() or 1


def _experiment_from_config(cfg: dict) -> ExperimentConfig:
    common = {}
    for field, ftype in (("n", int), ("replications", int), ("base_seed", int)):
        if field in cfg:
            common[field] = _require(cfg, field, ftype)
    if "alpha" in cfg:
        common["alpha"] = _require(cfg, "alpha", (int, float))
    if "n" not in common:
        raise ConfigError("config field 'n' is missing")
    if "experiment" in cfg:
        exp_id = _require(cfg, "experiment", int)
        if exp_id not in EXPERIMENT_PARAMS:
            raise ConfigError("config field 'experiment' must be 1..4")
        return experiment_config(exp_id, **common)
    try:
        return ExperimentConfig(
            mu=_require(cfg, "mu", list),
            spread=_require(cfg, "spread", list),
            sigma=_require(cfg, "sigma", list),
            b0=_require(cfg, "b0", list),
            b1=_require(cfg, "b1", list),
            error_kind=cfg.get("error_kind", "gaussian"),
            **common,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def cmd_simulate(args) -> int:
    cfg = _experiment_from_config(_load_json(args.config))
    summary = run_monte_carlo(cfg, workers=_threads(args))
    rows = [
        {
            "method": method,
            "component": k + 1,
            "n": cfg.n,
            "coverage": summary.coverage[(method, k)],
            "avg_volume": summary.avg_volume[(method, k)],
            "failures": summary.failures[method],
        }
        for method in ("LS", "EM")
        for k in range(cfg.M)
    ]
    os.makedirs(args.output_dir, exist_ok=True)
    path = os.path.join(args.output_dir, f"summary.{args.format}")
    if args.format == "csv":
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["method", "component", "n", "coverage", "avg_volume", "failures"])
            for row in rows:
                writer.writerow(
                    [row["method"], row["component"], row["n"],
                     _fmt(row["coverage"]), _fmt(row["avg_volume"]), row["failures"]]
                )
    else:
        with open(path, "w") as fh:
            json.dump({"valid": summary.valid, "rows": rows}, fh, indent=2)
    print(f"wrote {path}")
    if not summary.valid:
        print(
            f"warning: failures exceeded 5% of replications {summary.failures}",
            file=sys.stderr,
        )
        return EXIT_FAILURES
    return EXIT_OK


def read_sample_csv(path) -> MixtureSample:
    """Parse a y,x1..xd,p1..pM CSV into a sample.

    Probability rows off by more than the strict tolerance are renormalized
    (with a warning) as long as they are within 1% of summing to one.
    """
    try:
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None:
                raise ConfigError(f"{path}: empty CSV")
            header = [h.strip().lower() for h in header]
            d = sum(1 for h in header if h.startswith("x"))
            M = sum(1 for h in header if h.startswith("p"))
            expected = ["y"] + [f"x{i}" for i in range(1, d + 1)] + [f"p{m}" for m in range(1, M + 1)]
            if header != expected or d < 1 or M < 1:
                raise ConfigError(
                    f"{path}: header must be y,x1..xd,p1..pM (got {','.join(header)})"
                )
            data = []
            for lineno, row in enumerate(reader, start=2):
                if not row:
                    continue
                if len(row) != 1 + d + M:
                    raise ConfigError(f"{path}:{lineno}: expected {1 + d + M} fields")
                try:
                    data.append([float(v) for v in row])
                except ValueError as exc:
                    raise ConfigError(f"{path}:{lineno}: {exc}") from exc
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    if not data:
        raise ConfigError(f"{path}: no data rows")
    arr = np.asarray(data)
    Y, X, P = arr[:, 0], arr[:, 1 : 1 + d], arr[:, 1 + d :]
    sums = P.sum(axis=1)
    if np.any(np.abs(sums - 1.0) > 0.01):
        bad = int(np.argmax(np.abs(sums - 1.0)))
        raise ConfigError(f"{path}: probability row {bad} sums to {sums[bad]}")
    off = np.abs(sums - 1.0) > PROB_ROW_TOL
    if off.any():
        print("warning: probability rows renormalized to sum to 1", file=sys.stderr)
        P = P.copy()
        P[off] = np.clip(P[off], 0.0, None)
        P[off] /= P[off].sum(axis=1, keepdims=True)
    sample = MixtureSample(Y=Y, X=X, P=P)
    violations = validate_sample(sample)
    if violations:
        raise ConfigError(f"{path}: invalid sample: {violations[:5]}")
    return sample


def _ellipsoid_record(e) -> dict:
    return {
        "kind": e.kind,
        "center": [float(v) for v in e.center],
        "shape": [[float(v) for v in row] for row in e.shape],
        "threshold": float(e.threshold),
    }


def cmd_estimate(args) -> int:
    cfg = _load_json(args.config)
    sample = read_sample_csv(_require(cfg, "csv", str))
    alpha = float(cfg.get("alpha", 0.05))
    use_em = args.em or bool(cfg.get("em", False))
    bonf = args.bonferroni or int(cfg.get("bonferroni", 0))
    if bonf:
        alpha = alpha / bonf
    M = sample.dims.M

    result = {"n": sample.dims.n, "d": sample.dims.d, "M": M, "alpha": alpha, "components": []}
    fits = ls_fit_all(sample)
    for k in range(M):
        ell = ls_ellipsoid(fits[k], sample.dims.n, alpha)
        result["components"].append(
            {
                "component": k + 1,
                "ls": {
                    "bhat": [float(v) for v in fits[k].bhat],
                    "Vhat": [[float(v) for v in row] for row in fits[k].Vhat],
                    "repaired": fits[k].repaired,
                    "ellipsoid": _ellipsoid_record(ell),
                },
            }
        )
    if use_em:
        res = em_fit(sample, pilot_estimates(sample), EmConfig())
        info = empirical_info(sample, res.tau)
        params = unflatten(res.tau)
        for k in range(M):
            sub = info_subblock(info, k)
            ell = info_ellipsoid(params[k].b, sub, alpha, kind="EM")
            result["components"][k]["em"] = {
                "bhat": [float(v) for v in params[k].b],
                "info_subblock": [[float(v) for v in row] for row in sub.Iplus],
                "converged": res.converged,
                "iters": res.iters,
                "ellipsoid": _ellipsoid_record(ell),
            }
    os.makedirs(args.output_dir, exist_ok=True)
    path = os.path.join(args.output_dir, "estimates.json")
    with open(path, "w") as fh:
        json.dump(result, fh, indent=2)
    print(f"wrote {path}")
    return EXIT_OK


_STROKES = ["2,2", "6,3", "none"]  # dotted, dashed, solid per component


def _svg_panel(ellipsoids, x0, width, height, pad, title):
    pts = [boundary_points(e, 512) for e in ellipsoids]
    allp = np.vstack(pts)
    lo, hi = allp.min(axis=0), allp.max(axis=0)
    span = np.maximum(hi - lo, 1e-12)
    scale = min((width - 2 * pad) / span[0], (height - 2 * pad) / span[1])
    mid = 0.5 * (lo + hi)

    def to_px(p):
        x = x0 + width / 2 + (p[:, 0] - mid[0]) * scale
        y = height / 2 - (p[:, 1] - mid[1]) * scale  # b1 up
        return x, y

    parts = [f'<text x="{x0 + width / 2:.1f}" y="16" text-anchor="middle">{title}</text>']
    for i, p in enumerate(pts):
        x, y = to_px(p)
        path = "M " + " L ".join(f"{a:.2f} {b:.2f}" for a, b in zip(x, y)) + " Z"
        dash = _STROKES[i % len(_STROKES)]
        dash_attr = "" if dash == "none" else f' stroke-dasharray="{dash}"'
        parts.append(
            f'<path d="{path}" fill="none" stroke="black"{dash_attr}/>'
        )
    parts.append(
        f'<text x="{x0 + width / 2:.1f}" y="{height - 4:.1f}" text-anchor="middle">b0</text>'
    )
    parts.append(
        f'<text x="{x0 + 12:.1f}" y="{height / 2:.1f}" text-anchor="middle" '
        f'transform="rotate(-90 {x0 + 12:.1f} {height / 2:.1f})">b1</text>'
    )
    return parts


def cmd_plot(args) -> int:
    cfg = _load_json(args.config)
    est = _load_json(_require(cfg, "estimates", str))
    if est.get("d") != 2:
        raise UnsupportedDim(f"plotting requires d=2, got d={est.get('d')}")
    from .ellipsoid import Ellipsoid

    panels = []
    for method in ("ls", "em"):
        ells = []
        for comp in est["components"]:
            if method not in comp:
                continue
            rec = comp[method]["ellipsoid"]
            ells.append(
                Ellipsoid(
                    center=np.asarray(rec["center"]),
                    shape=np.asarray(rec["shape"]),
                    threshold=rec["threshold"],
                    kind=rec["kind"],
                )
            )
        if ells:
            panels.append((method.upper(), ells))

    width, height, pad = 420, 420, 40
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'width="{width * len(panels)}" height="{height}" '
        f'font-family="sans-serif" font-size="12">'
    ]
    for i, (title, ells) in enumerate(panels):
        parts.extend(_svg_panel(ells, i * width, width, height, pad, title))
    parts.append("</svg>")
    os.makedirs(args.output_dir, exist_ok=True)
    path = os.path.join(args.output_dir, cfg.get("name", "ellipsoids") + ".svg")
    with open(path, "w") as fh:
        fh.write("\n".join(parts))
    print(f"wrote {path}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mixreg",
        description="Regression estimation and confidence ellipsoids for "
        "mixtures with varying concentrations",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run a Monte Carlo coverage experiment")
    sim.add_argument("--config", required=True)
    sim.add_argument("--output-dir", required=True)
    sim.add_argument("--format", choices=("csv", "json"), default="csv")
    sim.add_argument("--threads", type=int, default=None)
    sim.set_defaults(func=cmd_simulate)

    est = sub.add_parser("estimate", help="estimate coefficients from a CSV dataset")
    est.add_argument("--config", required=True)
    est.add_argument("--output-dir", required=True)
    est.add_argument("--em", action="store_true", help="also run the EM pipeline")
    est.add_argument("--bonferroni", type=int, default=0, metavar="M",
                     help="divide alpha by M for simultaneous sets")
    est.set_defaults(func=cmd_estimate)

    plot = sub.add_parser("plot", help="render estimate output as an SVG")
    plot.add_argument("--config", required=True)
    plot.add_argument("--output-dir", required=True)
    plot.set_defaults(func=cmd_plot)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SingularGram, SingularDesign) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_SINGULAR
    except UnsupportedDim as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DIM
    except MixregError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_SINGULAR


if __name__ == "__main__":
    sys.exit(main())
