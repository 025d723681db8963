"""Batch front-end: scheme ingestion, command dispatch, deterministic output.

Every command reads one JSON configuration, runs a pipeline, and writes CSV
and JSON artifacts plus a rendered figure and a manifest into the output
directory.  Identical configuration and seed give byte-identical tables.
Exit codes: 0 success, 2 validation failure, 3 numeric non-convergence.
"""
from __future__ import annotations

import argparse
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import coding, correlation, fractal, report, spectral, transfer
from .config import ConfigError, RunConfig, load_config

ENV_PREFIX = "SCHOTTKYFLOW_"

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NUMERIC = 3

COMMANDS = ("validate", "dimension", "pressure-curve", "gap-sweep", "stability",
            "lnic", "ncp", "correlation", "geodesics")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="schottkyflow",
        description="transfer-operator laboratory for Schottky groups")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", type=str, default=None,
                        help="path to the JSON run configuration")
    parser.add_argument("--out", type=str, default=None,
                        help="output directory (default from config)")
    parser.add_argument("--seed", type=int, default=None,
                        help="seed override for all sampled quantities")
    parser.add_argument("--depth", type=int, default=None,
                        help="cylinder depth override")
    parser.add_argument("--threads", type=int, default=None,
                        help="worker threads, 0 = auto (reserved; outputs are "
                             "independent of it)")
    return parser


def _env(name: str):
    return os.environ.get(ENV_PREFIX + name)


def resolve_config(args) -> RunConfig:
    path = args.config or _env("CONFIG")
    cfg = load_config(path) if path else RunConfig()
    for attr, flag, env, cast in (("seed", args.seed, "SEED", int),
                                  ("depth", args.depth, "DEPTH", int),
                                  ("threads", args.threads, "THREADS", int),
                                  ("output_dir", args.out, "OUT", str)):
        value = flag
        if value is None and _env(env) is not None:
            value = cast(_env(env))
        if value is not None:
            setattr(cfg, attr, value)
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve_config(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    outdir = Path(cfg.output_dir)
    runner = _RUNNERS[args.command]
    try:
        return runner(cfg, outdir)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (transfer.NoConvergence, transfer.BracketFailure,
            correlation.Divergence) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (coding.CapacityExceeded, correlation.HorizonExceeded) as exc:
        print(f"capacity exhausted: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


def _validated_scheme(cfg: RunConfig, outputs, outdir):
    """Build the scheme and stop with exit 2 when its invariants fail."""
    scheme = cfg.build_scheme()
    rep = coding.validate(scheme)
    if not rep.ok:
        for failure in rep.failures:
            print(f"invalid scheme: {failure}", file=sys.stderr)
        report.write_json(outdir / "validation_report.json", rep.as_dict())
        return None
    return scheme


def cmd_validate(cfg: RunConfig, outdir: Path) -> int:
    scheme = cfg.build_scheme()
    rep = coding.validate(scheme)
    outputs = [report.write_json(outdir / "validation_report.json", rep.as_dict())]
    points = coding.limit_points(scheme, 20000, word_length=cfg.ncp.word_length,
                                 seed=cfg.seed)
    outputs.append(report.save_figure(report.fig_scheme(scheme, points),
                                      outdir / "scheme.png"))
    outputs.append(report.write_manifest(outdir, "validate", cfg, outputs))
    if not rep.ok:
        for failure in rep.failures:
            print(f"invalid scheme: {failure}", file=sys.stderr)
        return EXIT_VALIDATION
    return EXIT_OK


def cmd_dimension(cfg: RunConfig, outdir: Path) -> int:
    outputs: list[Path] = []
    scheme = _validated_scheme(cfg, outputs, outdir)
    if scheme is None:
        return EXIT_VALIDATION
    delta = transfer.dimension(scheme, cfg.depth, tol=cfg.dimension_tol,
                               capacity=cfg.cylinder_capacity)
    residual = transfer.pressure(scheme, cfg.depth, delta,
                                 capacity=cfg.cylinder_capacity)
    points = coding.limit_points(scheme, 10**6,
                                 word_length=cfg.ncp.word_length, seed=cfg.seed)
    box = fractal.box_counting_dimension(points)
    payload = {
        "delta": delta,
        "depth": cfg.depth,
        "pressure_at_delta": residual,
        "box_counting": {
            "dimension": box.dimension,
            "fit_residual": box.fit_residual,
            "points": int(points.size),
        },
    }
    outputs.append(report.write_json(outdir / "dimension.json", payload))
    weights = transfer.normalize(scheme, cfg.depth, delta=delta,
                                 capacity=cfg.cylinder_capacity)
    tower = scheme.tower(cfg.depth, cfg.cylinder_capacity)
    labels = ["".join(coding.symbol_label(int(s), scheme.rank) for s in row)
              for row in tower.words(cfg.depth)]
    outputs.append(report.write_csv(
        outdir / "eigendata.csv", ["cylinder_word", "h", "nu"],
        zip(labels, weights.h0, weights.nu0)))
    curve = transfer.PressureCurve(scheme, min(cfg.depth, 8),
                                   capacity=cfg.cylinder_capacity)
    s_grid = np.linspace(0.0, 2.0, 11)
    p_grid = [curve.pressure(s) for s in s_grid]
    outputs.append(report.save_figure(report.fig_pressure(s_grid, p_grid, delta),
                                      outdir / "dimension.png"))
    outputs.append(report.write_manifest(outdir, "dimension", cfg, outputs,
                                         extra={"delta": delta}))
    return EXIT_OK


def cmd_pressure_curve(cfg: RunConfig, outdir: Path) -> int:
    outputs: list[Path] = []
    scheme = _validated_scheme(cfg, outputs, outdir)
    if scheme is None:
        return EXIT_VALIDATION
    lo, hi, n = cfg.grids.pressure_s
    s_grid = np.linspace(lo, hi, int(n))
    curve = transfer.PressureCurve(scheme, cfg.depth,
                                   capacity=cfg.cylinder_capacity,
                                   tol=cfg.rpf_tol)
    p_grid = [curve.pressure(s) for s in s_grid]
    outputs.append(report.write_csv(outdir / "pressure_curve.csv",
                                    ["s", "pressure"], zip(s_grid, p_grid)))
    outputs.append(report.save_figure(report.fig_pressure(s_grid, p_grid),
                                      outdir / "pressure_curve.png"))
    outputs.append(report.write_manifest(outdir, "pressure-curve", cfg, outputs))
    return EXIT_OK


def cmd_gap_sweep(cfg: RunConfig, outdir: Path) -> int:
    outputs: list[Path] = []
    scheme = _validated_scheme(cfg, outputs, outdir)
    if scheme is None:
        return EXIT_VALIDATION
    grid = spectral.SweepGrid(b_values=cfg.grids.gap_b, k_values=cfg.grids.gap_k,
                              depth=cfg.depth, iterations=cfg.iterations)
    weights = transfer.normalize(scheme, cfg.depth, capacity=cfg.cylinder_capacity,
                                 dimension_tol=cfg.dimension_tol)
    rep = spectral.gap_sweep(scheme, grid, weights=weights, seed=cfg.seed)
    rows = [(r.b, r.k, r.eta, r.fit_residual, r.flagged) for r in rep.rows]
    outputs.append(report.write_csv(outdir / "gap_sweep.csv",
                                    ["b", "k", "eta", "fit_residual", "flag"],
                                    rows))
    outputs.append(report.save_figure(report.fig_gap_heatmap(rep),
                                      outdir / "gap_sweep.png"))
    outputs.append(report.write_manifest(
        outdir, "gap-sweep", cfg, outputs,
        extra={"delta": weights.delta, "min_eta_twisted": rep.min_eta_twisted}))
    return EXIT_OK


def cmd_stability(cfg: RunConfig, outdir: Path) -> int:
    outputs: list[Path] = []
    scheme = _validated_scheme(cfg, outputs, outdir)
    if scheme is None:
        return EXIT_VALIDATION
    rows = spectral.small_a_stability(
        scheme, cfg.grids.stability_a, b=cfg.grids.stability_b,
        k=cfg.grids.stability_k, depth=cfg.depth, iterations=cfg.iterations,
        seed=cfg.seed)
    outputs.append(report.write_csv(
        outdir / "stability.csv", ["a", "b", "k", "eta", "fit_residual",
                                   "rel_change"],
        [(r.a, cfg.grids.stability_b, cfg.grids.stability_k, r.eta,
          r.fit_residual, r.rel_change) for r in rows]))
    outputs.append(report.save_figure(report.fig_stability(rows),
                                      outdir / "stability.png"))
    outputs.append(report.write_manifest(outdir, "stability", cfg, outputs))
    return EXIT_OK


def cmd_lnic(cfg: RunConfig, outdir: Path) -> int:
    outputs: list[Path] = []
    scheme = _validated_scheme(cfg, outputs, outdir)
    if scheme is None:
        return EXIT_VALIDATION
    res = spectral.lnic_probe(scheme, m2=cfg.lnic.word_length,
                              n_points=cfg.lnic.base_points, seed=cfg.seed,
                              n_omega=cfg.lnic.omegas)
    outputs.append(report.write_csv(outdir / "lnic.csv",
                                    ["omega_angle", "min_pairing"],
                                    zip(res.omega_angles, res.omega_values)))
    outputs.append(report.write_json(outdir / "lnic.json", {
        "probe": res.value,
        "word_length": res.m2,
        "n_words": res.n_words,
        "fuchsian": scheme.is_fuchsian(),
    }))
    outputs.append(report.save_figure(
        report.fig_lnic(res.omega_angles, np.maximum(res.omega_values, 1e-300)),
        outdir / "lnic.png"))
    outputs.append(report.write_manifest(outdir, "lnic", cfg, outputs,
                                         extra={"probe": res.value}))
    return EXIT_OK


def cmd_ncp(cfg: RunConfig, outdir: Path) -> int:
    outputs: list[Path] = []
    scheme = _validated_scheme(cfg, outputs, outdir)
    if scheme is None:
        return EXIT_VALIDATION
    points = coding.limit_points(scheme, cfg.ncp.points,
                                 word_length=cfg.ncp.word_length, seed=cfg.seed)
    rng = np.random.default_rng(cfg.seed)
    centers = points[rng.integers(0, points.size, cfg.ncp.centers)]
    rows = []
    for eps in cfg.ncp.epsilons:
        for j in range(cfg.ncp.directions):
            angle = math.pi * j / cfg.ncp.directions
            w = complex(math.cos(angle), math.sin(angle))
            for x in centers:
                try:
                    spread = coding.ncp_spread(points, x, w, eps)
                except coding.EmptyBall:
                    continue
                rows.append((eps, angle, x.real, x.imag, spread))
    outputs.append(report.write_csv(
        outdir / "ncp.csv",
        ["epsilon", "direction_angle", "center_re", "center_im", "spread"],
        rows))
    outputs.append(report.save_figure(report.fig_ncp(rows), outdir / "ncp.png"))
    min_spread = min(r[4] for r in rows) if rows else math.nan
    outputs.append(report.write_manifest(outdir, "ncp", cfg, outputs,
                                         extra={"min_spread": min_spread}))
    return EXIT_OK


def cmd_correlation(cfg: RunConfig, outdir: Path) -> int:
    outputs: list[Path] = []
    scheme = _validated_scheme(cfg, outputs, outdir)
    if scheme is None:
        return EXIT_VALIDATION
    weights = transfer.normalize(scheme, cfg.depth, capacity=cfg.cylinder_capacity,
                                 dimension_tol=cfg.dimension_tol)
    obs = correlation.Observable(
        coeffs={cfg.correlation.character: cfg.correlation.coefficient},
        profile=cfg.correlation.profile)
    lo, hi, step = cfg.grids.correlation_t
    t_grid = np.arange(lo, hi + 1e-9, step)
    series = correlation.upsilon(scheme, obs, obs, t_grid, weights=weights,
                                 capacity=cfg.cylinder_capacity)
    outputs.append(report.write_csv(
        outdir / "correlation.csv", ["t", "upsilon", "upsilon0", "upsilon1"],
        zip(series.t, series.upsilon, series.upsilon0, series.upsilon1)))
    operator = correlation.laplace_series(
        scheme, obs, obs, cfg.correlation.xi, depth=cfg.depth, weights=weights,
        k_terms=cfg.correlation.k_terms, capacity=cfg.cylinder_capacity)
    numeric = correlation.laplace_of_series(series, cfg.correlation.xi)
    payload = {
        "xi": cfg.correlation.xi,
        "laplace_series": operator.value.real,
        "laplace_series_tail": operator.tail_estimate,
        "laplace_of_upsilon0": numeric.real,
        "relative_gap": abs(numeric - operator.value) / abs(operator.value)
        if operator.value != 0 else math.nan,
        "depth_series": cfg.depth,
        "depth_upsilon": series.depth,
    }
    fit = None
    try:
        fit = correlation.fit_decay(series)
        payload["fit"] = {"eta": fit.eta, "amplitude": fit.amplitude,
                          "fit_residual": fit.fit_residual,
                          "eta_per_step": fit.eta * weights.mean_tau}
    except correlation.InsufficientDecayWindow as exc:
        payload["fit"] = {"error": str(exc)}
    outputs.append(report.write_json(outdir / "correlation.json", payload))
    outputs.append(report.save_figure(report.fig_correlation(series, fit),
                                      outdir / "correlation.png"))
    outputs.append(report.write_manifest(outdir, "correlation", cfg, outputs))
    return EXIT_OK


def cmd_geodesics(cfg: RunConfig, outdir: Path) -> int:
    outputs: list[Path] = []
    scheme = _validated_scheme(cfg, outputs, outdir)
    if scheme is None:
        return EXIT_VALIDATION
    delta = transfer.dimension(scheme, cfg.depth, tol=cfg.dimension_tol,
                               capacity=cfg.cylinder_capacity)
    T_max = max(cfg.grids.geodesic_T)
    classes = coding.closed_geodesics(scheme, T_max,
                                      capacity=cfg.geodesic_capacity)
    outputs.append(report.write_csv(
        outdir / "geodesics.csv", ["class_id", "length", "angle"],
        [(g.class_id, g.length, g.angle) for g in classes]))
    rows = correlation.holonomy_equidistribution(scheme, cfg.grids.geodesic_T,
                                                 delta,
                                                 capacity=cfg.geodesic_capacity)
    outputs.append(report.write_csv(
        outdir / "equidistribution.csv",
        ["T", "count", "s1", "s2", "s3", "li_ratio"],
        [(r.T, r.count, r.s1, r.s2, r.s3, r.li_ratio) for r in rows]))
    outputs.append(report.save_figure(report.fig_geodesics(classes, rows),
                                      outdir / "geodesics.png"))
    outputs.append(report.write_manifest(outdir, "geodesics", cfg, outputs,
                                         extra={"delta": delta,
                                                "classes": len(classes)}))
    return EXIT_OK


_RUNNERS = {
    "validate": cmd_validate,
    "dimension": cmd_dimension,
    "pressure-curve": cmd_pressure_curve,
    "gap-sweep": cmd_gap_sweep,
    "stability": cmd_stability,
    "lnic": cmd_lnic,
    "ncp": cmd_ncp,
    "correlation": cmd_correlation,
    "geodesics": cmd_geodesics,
}


if __name__ == "__main__":
    sys.exit(main())
