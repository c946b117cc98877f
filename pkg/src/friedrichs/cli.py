"""Command-line front end.

Subcommands: threshold, eigenvalue, classify, expansion, oracle, sweep.
Exit codes: 0 success, 1 usage/config error, 2 model-validity error
(degenerate or non-unique band maximum at the requested p).  The
FRIEDRICHS_THREADS environment variable caps sweep parallelism.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import __version__
from .critical import find_maximizer
from .errors import ConfigError, FriedrichsError, ModelValidityError
from .models import ModelConfig, model_from_config
from .oracle import convergence_report, dense_spectrum, secular_root
from .quadrature import OmegaEvaluator, QuadratureSpec
from .solver import (
    analyze,
    classify_threshold,
    coupling_threshold,
    eigenvalue_error_estimate,
    expansion_fit,
    solve_eigenvalue,
)

DEFAULT_CONFIG = {"family": "two_particle", "hopping": [1.0, 1.0, 1.0],
                  "phi": {"constant": 1.0}}
SWEEP_OUTPUTS = ("threshold", "eigenvalue", "classify", "expansion", "oracle")


class _Parser(argparse.ArgumentParser):
    """argparse variant using exit code 1 for usage errors."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print("%s: error: %s" % (self.prog, message), file=sys.stderr)
        raise SystemExit(1)


def _parse_point(text):
    parts = text.split(",")
    if len(parts) != 3:
        raise ConfigError("expected 3 comma-separated components: %r" % text)
    try:
        return np.array([float(v) for v in parts])
    except ValueError:
        raise ConfigError("cannot parse torus point: %r" % text)


def _parse_path(text):
    stops = [s for s in text.split(":") if s.strip()]
    if not stops:
        raise ConfigError("empty p-path")
    return [_parse_point(s) for s in stops]


def _parse_mu_spec(text):
    """'x1.5' = 1.5 * mu(p); a plain float is an absolute coupling."""
    text = text.strip()
    try:
        if text.startswith("x"):
            return ("multiple", float(text[1:]))
        return ("absolute", float(text))
    except ValueError:
        raise ConfigError("cannot parse mu spec: %r" % text)


def _resolve_mu(mu_spec, mu_threshold):
    kind, value = mu_spec
    return value * mu_threshold if kind == "multiple" else value


def _load_config(args):
    if getattr(args, "config", None):
        return ModelConfig.load(args.config)
    return ModelConfig.from_dict(DEFAULT_CONFIG)


def _quadrature_spec(args):
    kw = {}
    if getattr(args, "grid", None):
        kw["n_grid"] = args.grid
    if getattr(args, "tol", None):
        kw["rel_tol"] = args.tol
    if getattr(args, "rho", None):
        kw["rho"] = args.rho
    return QuadratureSpec(**kw)


def _config_hash(cfg_dict):
    blob = json.dumps(cfg_dict, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def _metadata(cfg, spec):
    d = cfg.to_dict()
    return {
        "config": d,
        "config_sha256": _config_hash(d),
        "quadrature": {
            "n_grid": spec.n_grid, "rho": spec.rho,
            "n_radial": spec.n_radial, "n_angular": spec.n_angular,
            "bump_order": spec.bump_order, "rel_tol": spec.rel_tol,
            "max_refinements": spec.max_refinements,
        },
        "version": __version__,
    }


def _emit(payload, args, filename):
    text = json.dumps(payload, indent=2, sort_keys=True)
    print(text)
    if getattr(args, "out", None):
        os.makedirs(args.out, exist_ok=True)
        with open(os.path.join(args.out, filename), "w") as fh:
            fh.write(text + "\n")


def _fmt(x):
    return "" if x is None else "%.17g" % x


# -- subcommands --------------------------------------------------------


def cmd_threshold(args):
    cfg = _load_config(args)
    model = model_from_config(cfg)
    spec = _quadrature_spec(args)
    p = _parse_point(args.p)
    cp = find_maximizer(model, p)
    ev = OmegaEvaluator(model, p, cp, spec)
    payload = {
        "p": list(p),
        "q0": list(cp.q0.as_array()),
        "M": cp.M,
        "m": cp.m,
        "mu_threshold": coupling_threshold(model, p, cp, evaluator=ev),
        "metadata": _metadata(cfg, spec),
    }
    _emit(payload, args, "threshold.json")
    return 0


def _report_payload(model, cfg, spec, p, mu_spec, with_expansion):
    cp = find_maximizer(model, p)
    ev = OmegaEvaluator(model, p, cp, spec)
    mu_p = coupling_threshold(model, p, cp, evaluator=ev)
    mu = _resolve_mu(mu_spec, mu_p)
    report = analyze(model, p, cp, mu, evaluator=ev,
                     with_expansion=with_expansion)
    payload = report.to_json_dict()
    payload.update({
        "p": list(p),
        "q0": list(cp.q0.as_array()),
        "M": cp.M,
        "m": cp.m,
        "metadata": _metadata(cfg, spec),
    })
    return payload


def cmd_eigenvalue(args):
    cfg = _load_config(args)
    model = model_from_config(cfg)
    payload = _report_payload(model, cfg, _quadrature_spec(args),
                              _parse_point(args.p), _parse_mu_spec(args.mu),
                              with_expansion=False)
    _emit(payload, args, "eigenvalue.json")
    return 0


def cmd_classify(args):
    cfg = _load_config(args)
    model = model_from_config(cfg)
    spec = _quadrature_spec(args)
    p = _parse_point(args.p)
    cp = find_maximizer(model, p)
    ev = OmegaEvaluator(model, p, cp, spec)
    mu_p = coupling_threshold(model, p, cp, evaluator=ev)
    mu = _resolve_mu(_parse_mu_spec(args.mu), mu_p)
    result = classify_threshold(model, p, cp, mu, evaluator=ev)
    payload = {
        "p": list(p),
        "mu": mu,
        "mu_threshold": mu_p,
        "classification": result.label.value,
        "phi_at_q0": result.phi_at_q0,
        "l2_growth_rate": result.l2_growth_rate,
        "metadata": _metadata(cfg, spec),
    }
    _emit(payload, args, "classify.json")
    return 0


def cmd_expansion(args):
    cfg = _load_config(args)
    model = model_from_config(cfg)
    spec = _quadrature_spec(args)
    p = _parse_point(args.p)
    cp = find_maximizer(model, p)
    ev = OmegaEvaluator(model, p, cp, spec)
    window = tuple(float(v) for v in args.window.split(","))
    if len(window) != 2 or not 0 < window[0] < window[1]:
        raise ConfigError("window must be 'lo,hi' with 0 < lo < hi")
    fit = expansion_fit(model, p, cp, evaluator=ev, window=window,
                        n_points=args.points)
    payload = {
        "p": list(p),
        "tau0_fit": fit.tau0_fit,
        "tau0_closed": fit.tau0_closed,
        "rel_residual": fit.rel_residual,
        "sqrt_coeff": fit.sqrt_coeff,
        "linear_coeff": fit.linear_coeff,
        "threehalf_coeff": fit.threehalf_coeff,
        "deltas": list(fit.deltas),
        "data": list(fit.data),
        "metadata": _metadata(cfg, spec),
    }
    _emit(payload, args, "expansion.json")
    return 0


def cmd_oracle(args):
    cfg = _load_config(args)
    model = model_from_config(cfg)
    spec = _quadrature_spec(args)
    p = _parse_point(args.p)
    n_list = [int(v) for v in args.N.split(",") if v.strip()]
    if not n_list:
        raise ConfigError("empty N list")
    cp = find_maximizer(model, p)
    ev = OmegaEvaluator(model, p, cp, spec)
    mu_p = coupling_threshold(model, p, cp, evaluator=ev)
    mu = _resolve_mu(_parse_mu_spec(args.mu), mu_p)
    payload = {
        "p": list(p), "mu": mu, "mu_threshold": mu_p,
        "roots": [{"N": n, "root": secular_root(model, p, mu, n)}
                  for n in n_list],
        "metadata": _metadata(cfg, spec),
    }
    energy = solve_eigenvalue(model, p, cp, mu, evaluator=ev)
    payload["E_continuum"] = energy
    if energy is not None and all(r["root"] is not None
                                  for r in payload["roots"]):
        floor = eigenvalue_error_estimate(model, p, cp, mu, energy,
                                          evaluator=ev)
        rep = convergence_report(model, p, mu, n_list, energy, floor=floor)
        payload["convergence"] = [
            {"N": n, "root": r, "abs_dev": a, "rel_dev": d}
            for n, r, a, d in rep.rows]
        payload["trend_ok"] = rep.trend_ok
        if args.out:
            os.makedirs(args.out, exist_ok=True)
            rep.to_csv(os.path.join(args.out, "oracle_convergence.csv"))
    if args.dense:
        res = dense_spectrum(model, p, mu, args.dense)
        payload["dense"] = {"N": res.N, "max_diag": res.max_diag,
                            "min_eig": res.min_eig,
                            "secular_root": res.secular_root,
                            **res.spectrum_summary}
    _emit(payload, args, "oracle.json")
    return 0


# -- sweep ---------------------------------------------------------------


def _sweep_columns(outputs):
    cols = ["p1", "p2", "p3"]
    if "threshold" in outputs:
        cols += ["M", "m", "mu_threshold"]
    cols += ["mu"]
    if "eigenvalue" in outputs:
        cols += ["E"]
    if "classify" in outputs:
        cols += ["classification"]
    if "expansion" in outputs:
        cols += ["tau0_fit", "tau0_closed"]
    if "oracle" in outputs:
        cols += ["oracle_root"]
    cols += ["error"]
    return cols


def _sweep_point(model, spec, p, mu_specs, outputs, oracle_n):
    """Rows for a single p (mu-minor order). Failures land in the error
    column; a failure at the critical-point stage poisons every mu row."""
    rows = []
    try:
        cp = find_maximizer(model, p)
        ev = OmegaEvaluator(model, p, cp, spec)
        mu_p = coupling_threshold(model, p, cp, evaluator=ev)
        fit = (expansion_fit(model, p, cp, evaluator=ev)
               if "expansion" in outputs else None)
    except FriedrichsError as exc:
        base = {"p1": p[0], "p2": p[1], "p3": p[2], "error": str(exc)}
        return [dict(base, mu=_resolve_mu(ms, float("nan"))
                     if ms[0] == "absolute" else None) for ms in mu_specs]
    for mu_spec in mu_specs:
        mu = _resolve_mu(mu_spec, mu_p)
        row = {"p1": p[0], "p2": p[1], "p3": p[2], "mu": mu, "error": ""}
        if "threshold" in outputs:
            row.update(M=cp.M, m=cp.m, mu_threshold=mu_p)
        try:
            if "eigenvalue" in outputs:
                row["E"] = solve_eigenvalue(model, p, cp, mu, evaluator=ev)
            if "classify" in outputs:
                row["classification"] = classify_threshold(
                    model, p, cp, mu, evaluator=ev,
                    with_diagnostics=False).label.value
            if "expansion" in outputs:
                row["tau0_fit"] = fit.tau0_fit
                row["tau0_closed"] = fit.tau0_closed
            if "oracle" in outputs:
                row["oracle_root"] = secular_root(model, p, mu, oracle_n)
        except FriedrichsError as exc:
            row["error"] = str(exc)
        rows.append(row)
    return rows


def _sample_path(waypoints, samples):
    """samples points per segment, endpoints included once (p-major order)."""
    pts = [np.asarray(waypoints[0], dtype=float)]
    for a, b in zip(waypoints, waypoints[1:]):
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        for t in np.linspace(0.0, 1.0, samples)[1:]:
            pts.append(a + t * (b - a))
    return pts


def cmd_sweep(args):
    cfg = _load_config(args)
    model = model_from_config(cfg)
    spec = _quadrature_spec(args)
    if not args.out:
        raise ConfigError("sweep requires --out DIR")
    outputs = [o.strip() for o in args.outputs.split(",") if o.strip()]
    if not outputs:
        raise ConfigError("at least one output must be requested")
    for o in outputs:
        if o not in SWEEP_OUTPUTS:
            raise ConfigError("unknown output %r (choose from %s)"
                              % (o, ", ".join(SWEEP_OUTPUTS)))
    mu_specs = [_parse_mu_spec(s) for s in args.mu.split(",") if s.strip()]
    if not mu_specs:
        raise ConfigError("at least one mu value must be requested")

    if args.p_grid:
        ax = -np.pi + 2.0 * np.pi * (np.arange(args.p_grid) + 0.5) / args.p_grid
        points = [np.array([a, b, c]) for a in ax for b in ax for c in ax]
        path_desc = {"p_grid": args.p_grid}
    else:
        if not args.path:
            raise ConfigError("sweep requires --path or --p-grid")
        if args.samples < 1:
            raise ConfigError("sample count must be >= 1")
        waypoints = _parse_path(args.path)
        points = _sample_path(waypoints, args.samples)
        path_desc = {"path": [list(w) for w in waypoints],
                     "samples": args.samples}

    workers = os.environ.get("FRIEDRICHS_THREADS")
    workers = int(workers) if workers else min(4, os.cpu_count() or 1)
    task = lambda p: _sweep_point(model, spec, p, mu_specs, outputs,
                                  args.oracle_n)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            groups = list(pool.map(task, points))
    else:
        groups = [task(p) for p in points]

    columns = _sweep_columns(outputs)
    os.makedirs(args.out, exist_ok=True)
    csv_path = os.path.join(args.out, "sweep.csv")
    n_ok = 0
    with open(csv_path, "w") as fh:
        fh.write(",".join(columns) + "\n")
        for rows in groups:
            for row in rows:
                cells = []
                for col in columns:
                    v = row.get(col)
                    if col in ("classification", "error"):
                        cells.append("" if v is None else str(v))
                    else:
                        cells.append(_fmt(v))
                fh.write(",".join(cells) + "\n")
                if not row.get("error"):
                    n_ok += 1
    manifest = {
        "csv": "sweep.csv",
        "columns": columns,
        "outputs": outputs,
        "mu_specs": [("x%g" % v) if k == "multiple" else ("%.17g" % v)
                     for k, v in mu_specs],
        "rows": sum(len(g) for g in groups),
        "rows_succeeded": n_ok,
        **path_desc,
        **_metadata(cfg, spec),
    }
    with open(os.path.join(args.out, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(json.dumps({"csv": csv_path, "rows": manifest["rows"],
                      "rows_succeeded": n_ok}, indent=2, sort_keys=True))
    return 0 if n_ok >= 1 else 2


# -- entry point ----------------------------------------------------------


def _add_common(sub):
    sub.add_argument("--config", help="model config JSON path "
                     "(default: builtin two_particle, phi = 1)")
    sub.add_argument("--out", help="output directory for artifacts")
    sub.add_argument("--grid", type=int, help="torus grid size per axis")
    sub.add_argument("--tol", type=float, help="quadrature relative tolerance")
    sub.add_argument("--rho", type=float, help="near-field ball radius")


def build_parser():
    parser = _Parser(prog="friedrichs",
                     description="Band-edge thresholds, bound states and "
                                 "threshold classification on the 3-torus.")
    parser.add_argument("--version", action="version", version=__version__)
    subs = parser.add_subparsers(dest="command", required=True)

    sp = subs.add_parser("threshold", help="q0, band edges and mu(p)")
    sp.add_argument("--p", default="0,0,0")
    _add_common(sp)
    sp.set_defaults(func=cmd_threshold)

    sp = subs.add_parser("eigenvalue", help="bound-state report at (mu, p)")
    sp.add_argument("--p", default="0,0,0")
    sp.add_argument("--mu", default="x2",
                    help="coupling: absolute value or xR for R*mu(p)")
    _add_common(sp)
    sp.set_defaults(func=cmd_eigenvalue)

    sp = subs.add_parser("classify", help="threshold classification")
    sp.add_argument("--p", default="0,0,0")
    sp.add_argument("--mu", default="x1",
                    help="default x1 means exactly the computed mu(p)")
    _add_common(sp)
    sp.set_defaults(func=cmd_classify)

    sp = subs.add_parser("expansion", help="square-root edge expansion fit")
    sp.add_argument("--p", default="0,0,0")
    sp.add_argument("--window", default="1e-4,1e-2")
    sp.add_argument("--points", type=int, default=8)
    _add_common(sp)
    sp.set_defaults(func=cmd_expansion)

    sp = subs.add_parser("oracle", help="finite-lattice cross-checks")
    sp.add_argument("--p", default="0,0,0")
    sp.add_argument("--mu", default="x2")
    sp.add_argument("--N", default="16,32,64")
    sp.add_argument("--dense", type=int, default=0,
                    help="also run the dense eigensolver at this N (<= 12)")
    _add_common(sp)
    sp.set_defaults(func=cmd_oracle)

    sp = subs.add_parser("sweep", help="(p, mu) sweep to CSV + manifest")
    sp.add_argument("--path", default="",
                    help="waypoints 'x,y,z:x,y,z[:...]'")
    sp.add_argument("--samples", type=int, default=9,
                    help="samples per path segment")
    sp.add_argument("--p-grid", dest="p_grid", type=int, default=0,
                    help="alternative: uniform p-grid size per axis")
    sp.add_argument("--mu", default="x0.5,x1,x2",
                    help="comma list of couplings (absolute or multiples)")
    sp.add_argument("--outputs", default="threshold,eigenvalue,classify")
    sp.add_argument("--oracle-n", dest="oracle_n", type=int, default=64)
    _add_common(sp)
    sp.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if exc.code is not None else 0
    try:
        return args.func(args)
    except ModelValidityError as exc:
        print("friedrichs: %s" % exc, file=sys.stderr)
        return 2
    except (ConfigError, OSError) as exc:
        print("friedrichs: %s" % exc, file=sys.stderr)
        return 1
    except FriedrichsError as exc:
        print("friedrichs: %s" % exc, file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
