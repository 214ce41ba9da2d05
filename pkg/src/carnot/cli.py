"""Command line runner: ``carnot <experiment> --config file.yaml``.

Exit status 0 on success, 2 on invalid input, 3 on numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from itertools import product

import numpy as np

from . import __version__
from .blowup import BlowupError, GraphDomainError, ImplicitGraph, adapted_frame, blowup_variety, hausdorff_convergence
from .config import EXAMPLES, EXPERIMENTS, ConfigError, load, normalize
from .dimension import box_dimension, low_degree_set
from .measure import DEFAULT_LADDER, MeasureError, density_limit, scaling_fit
from .metric import CalibrationError, HomogeneousDistance, calibrate
from .submanifold import DegreeConsistencyError, SubmanifoldError, pointwise_degree

log = logging.getLogger("carnot")

EXIT_OK, EXIT_INVALID, EXIT_NUMERICAL = 0, 2, 3

NUMERICAL_ERRORS = (BlowupError, GraphDomainError, MeasureError, CalibrationError, DegreeConsistencyError,
                    np.linalg.LinAlgError, FloatingPointError)


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def provenance(cfg):
    import scipy
    import sklearn

    return {
        "config_sha256": cfg.digest(),
        "experiment": cfg.experiment,
        "seed": cfg["seed"],
        "carnot": __version__,
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "sklearn": sklearn.__version__,
    }


def to_csv(rows, columns, header):
    buf = io.StringIO()
    for k in sorted(header):
        buf.write(f"# {k}: {header[k]}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_fmt(row[c]) for c in columns])
    return buf.getvalue()


def to_json(payload, header):
    return json.dumps({"provenance": header, **payload}, sort_keys=True, indent=2) + "\n"


def make_distance(cfg):
    spec = cfg["distance"]
    d = HomogeneousDistance(cfg.algebra, float(spec.get("epsilon", 1.0)), spec["kind"])
    report = None
    if "epsilon" not in spec and spec.get("calibrate", True):
        d, report = calibrate(d, samples=int(spec["calibration_samples"]), seed=int(spec["calibration_seed"]))
    return d, report


def _radii(cfg):
    return cfg.get("radii") or list(DEFAULT_LADDER)


# ---------------------------------------------------------------------------
# experiments; each returns the artifact text

def run_degree(cfg, d, header):
    rep = pointwise_degree(cfg.sigma, cfg.point)
    return to_json({"degree": rep.as_dict()}, header)


def run_blowup(cfg, d, header):
    var = blowup_variety(cfg.sigma, cfg.point)
    payload = var.to_dict()
    payload["homogeneous"] = var.is_homogeneous()
    payload["composition_residual"] = var.composition_residual()
    return to_json({"variety": payload}, header)


def run_scaling(cfg, d, header):
    fit = scaling_fit(cfg.sigma, cfg.point, _radii(cfg), d, n=cfg["samples"], seed=cfg["seed"],
                      method=cfg["method"], threads=cfg["threads"])
    header = dict(header, ratio_band=f"{fit.ratio_band[0]!r} {fit.ratio_band[1]!r}", violation=fit.violation)
    cols = ["r", "measure", "std_error", "ratio", "degree", "slope", "r2"]
    return to_csv(fit.rows(), cols, header)


def run_converge(cfg, d, header):
    table = hausdorff_convergence(cfg.sigma, cfg.point, _radii(cfg), d, R=float(cfg["R"]), n=cfg["samples"],
                                  seed=cfg["seed"], margin=float(cfg["margin"]))
    header = dict(header, log_slope=repr(table.log_slope), monotone=table.monotone)
    cols = ["r", "distance", "ratio", "sigma_to_variety", "variety_to_sigma", "spacing", "n_sigma",
            "n_variety", "undersampled"]
    return to_csv((row.__dict__ for row in table.rows), cols, header)


def run_density(cfg, d, header):
    dl = density_limit(cfg.sigma, cfg.point, _radii(cfg), d, n=cfg["samples"], seed=cfg["seed"],
                       method=cfg["method"], threads=cfg["threads"])
    header = dict(header, blowup_measure=repr(dl.blowup_measure), blowup_std_error=repr(dl.blowup_std_error),
                  stabilized=dl.stabilized, gap=repr(dl.gap), degree=dl.degree)
    rows = ({"r": r, "ratio": q, "std_error": e} for r, q, e in zip(dl.radii, dl.ratios, dl.ratio_errors))
    return to_csv(rows, ["r", "ratio", "std_error"], header)


def sample_submanifold(sigma, x, half_width, n, seed):
    """Points of ``Sigma`` from uniform graph parameters in ``[-w, w]^p`` around ``x``."""
    frame = adapted_frame(sigma, x)
    graph = ImplicitGraph(frame)
    rng = np.random.default_rng(seed)
    xi = rng.uniform(-half_width, half_width, size=(n, frame.p))
    y, ok = graph.evaluate(xi, strict=False)
    if not ok.all():
        log.warning("dropped %d parameters outside the graph domain", int((~ok).sum()))
    return frame.point + y[ok] @ frame.coordinate_matrix.T


def grid_submanifold(sigma, x, half_width, per_axis):
    frame = adapted_frame(sigma, x)
    graph = ImplicitGraph(frame)
    axis = np.linspace(-half_width, half_width, per_axis | 1)  # odd count keeps the base point
    xi = np.array(list(product(axis, repeat=frame.p)))
    y, ok = graph.evaluate(xi, strict=False)
    return frame.point + y[ok] @ frame.coordinate_matrix.T


def run_dimension(cfg, d, header):
    w = float(cfg["region"])
    if cfg.get("delta") is not None:
        grid = grid_submanifold(cfg.sigma, cfg.point, w, cfg["grid"])
        low = low_degree_set(cfg.sigma, float(cfg["delta"]), grid)
        header = dict(header, delta=low.delta, low_degree_points=len(low), grid_points=low.sample_size,
                      beyond_bound=low.beyond_bound)
        pts = low.points
    else:
        pts = sample_submanifold(cfg.sigma, cfg.point, w, cfg["samples"], cfg["seed"])
    if len(pts) == 0:
        rep = None
        header = dict(header, note="empty set")
        rows = []
    else:
        rep = box_dimension(pts, cfg["scales"], d, threads=cfg["threads"])
        header = dict(header, dim_estimate=repr(rep.dim_estimate), note=rep.note or "none")
        rows = rep.rows()
    return to_csv(rows, ["scale", "count", "running_slope"], header)


def run_calibrate(cfg, d, header):
    spec = cfg["distance"]
    base = HomogeneousDistance(cfg.algebra, 1.0, spec["kind"])
    _, report = calibrate(base, samples=int(spec["calibration_samples"]), seed=int(spec["calibration_seed"]))
    return to_json({"calibration": report.__dict__}, header)


RUNNERS = {
    "degree": run_degree, "blowup": run_blowup, "scaling": run_scaling, "converge": run_converge,
    "density": run_density, "dimension": run_dimension, "calibrate": run_calibrate,
}


def run(cfg):
    """Execute ``cfg`` and return the artifact text."""
    header = provenance(cfg)
    if cfg.experiment == "calibrate":
        return run_calibrate(cfg, None, header)
    d, _ = make_distance(cfg)
    header["distance"] = f"{d.kind} epsilon={d.epsilon!r}"
    return RUNNERS[cfg.experiment](cfg, d, header)


# ---------------------------------------------------------------------------

def _floats(text):
    try:
        return [float(v) for v in text.replace(",", " ").split()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected numbers, got {text!r}") from None


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    src = common.add_mutually_exclusive_group()
    src.add_argument("--config", help="YAML experiment config")
    src.add_argument("--example", choices=sorted(EXAMPLES), help="built-in config")
    common.add_argument("--seed", type=int, help="master seed (overrides the config)")
    common.add_argument("--threads", type=int, help="worker threads for ladder rungs and cover scales")
    common.add_argument("-o", "--output", help="write the artifact here instead of stdout")
    common.add_argument("--distance", choices=["gauge-max", "gauge-sum"], help="homogeneous gauge")
    common.add_argument("--point", type=_floats, help="base point, e.g. '0,0,0'")
    common.add_argument("--radii", type=_floats, help="radius ladder, e.g. '0.1,0.01'")
    common.add_argument("--samples", type=int, help="sample count")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="carnot", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="experiment", required=True)
    for name in EXPERIMENTS:
        sub.add_parser(name, parents=[common])
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.config:
            data, marks = load(args.config)
            source = args.config
        elif args.example:
            data, marks, source = dict(EXAMPLES[args.example]), {}, f"<example {args.example}>"
        else:
            raise ConfigError("need --config or --example")
        overrides = {"experiment": args.experiment, "seed": args.seed, "threads": args.threads,
                     "point": args.point, "radii": args.radii, "samples": args.samples}
        if args.distance:
            overrides["distance"] = {"kind": args.distance}
        cfg = normalize(data, marks, source, overrides)
        text = run(cfg)
    except (ConfigError, SubmanifoldError, ValueError) as exc:
        if isinstance(exc, NUMERICAL_ERRORS):
            print(f"numerical failure: {exc}", file=sys.stderr)
            return EXIT_NUMERICAL
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except NUMERICAL_ERRORS as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    out = args.output or cfg.get("output")
    if out:
        with open(out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
