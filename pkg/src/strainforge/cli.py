"""Command-line interface.

Subcommands: mechanics, sample, calibrate, top, report, spectra. Every
output file is written atomically (temp file + rename) and is byte-stable
for a fixed seed and config, independent of --threads. Exit status: 0 on
success, 1 on domain errors (single diagnostic line on stderr), 2 on
usage errors.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import _kernels, spectra
from .config import Config, load_config
from .errors import NoSingleEmitters, StrainforgeError
from .mechanics import solve_beam_state, strain_at
from .population import (
    IntrinsicStrainModel,
    calibrate_film_stress,
    calibrate_sigma,
    sample_post_deposition,
    sample_pre_deposition,
)
from .thermal import operability_curve, operational_temperature, operational_temperature_batch

__all__ = ["main", "run", "report"]

SCHEMA_VERSION = 1

# Measured batch means the report reproduces by construction.
PRE_TARGET_MEAN_GHZ = 119.0
POST_TARGET_MEAN_GHZ = 608.0

DEPTH_PROFILE_POINTS = 201
GSS_PDF_BINS = 250
TOP_CURVE_GSS_GHZ = np.linspace(46.0, 1500.0, 200)
OPERABILITY_TEMPS_K = np.linspace(0.25, 4.0, 151)


def _write_atomic(path: Path, text: str) -> None:
    path = Path(path)
    if path.parent and not path.parent.exists():
        path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + f".tmp{os.getpid()}")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


def _fmt(value: float) -> str:
    return repr(float(value))


def _json_text(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="strainforge",
        description="Model thin-film strain engineering of SiV centers.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON config path (or $STRAINFORGE_CONFIG)")
        p.add_argument("--seed", type=int,
                       help="Monte Carlo seed override (ignored by deterministic commands)")
        p.add_argument("--threads", type=int, help="worker threads (results identical)")

    p = sub.add_parser("mechanics", help="beam strain model outputs")
    common(p)
    p.add_argument("--depth-profile", action="store_true", required=True,
                   help="emit depth_nm, eps_xx, eps_yy, eps_zz CSV")
    p.add_argument("--out", help="output CSV (default: stdout)")

    p = sub.add_parser("sample", help="draw a Monte Carlo ensemble")
    common(p)
    p.add_argument("--phase", choices=("pre", "post"), required=True)
    p.add_argument("--n", type=int, help="sample count (default from config)")
    p.add_argument("--out", required=True, help="samples CSV path")

    p = sub.add_parser("calibrate", help="fit sigma or film stress to a mean")
    common(p)
    p.add_argument("--what", choices=("sigma", "stress"), required=True)
    p.add_argument("--target-ghz", type=float, required=True)
    p.add_argument("--n", type=int, help="sample count (default from config)")

    p = sub.add_parser("top", help="operating temperature of a splitting")
    common(p)
    p.add_argument("--gss-ghz", type=float, required=True)

    p = sub.add_parser("report", help="calibrated ensembles and figure data")
    common(p)
    p.add_argument("--n", type=int, help="sample count (default from config)")
    p.add_argument("--out-dir", default=".", help="directory for output files")

    p = sub.add_parser("spectra", help="batch spectrum analysis")
    common(p)
    p.add_argument("--dir", required=True, help="directory of spectrum CSV files")
    p.add_argument("--batch-tag", required=True, help="tag applied to the batch")
    p.add_argument("--out", required=True, help="stats JSON path")

    return parser


def _cmd_mechanics(args, cfg: Config) -> int:
    stack = cfg.layer_stack()
    field = solve_beam_state(stack)
    depths = np.linspace(0.0, field.depth_max_nm, DEPTH_PROFILE_POINTS)
    lines = ["depth_nm,eps_xx,eps_yy,eps_zz"]
    for depth in depths:
        eps = strain_at(field, float(depth))
        lines.append(
            f"{_fmt(depth)},{_fmt(eps.eps_xx)},{_fmt(eps.eps_yy)},{_fmt(eps.eps_zz)}"
        )
    text = "\n".join(lines) + "\n"
    if args.out:
        _write_atomic(Path(args.out), text)
    else:
        sys.stdout.write(text)
    return 0


def _ensemble_for_phase(args, cfg: Config, n: int, seed: int):
    params = cfg.siv_parameters()
    if args.phase == "pre":
        return sample_pre_deposition(
            n, cfg.intrinsic_model(), params, seed,
            sample_frame=cfg.sample_frame, threads=args.threads,
        )
    field = solve_beam_state(cfg.layer_stack())
    return sample_post_deposition(
        n, cfg.position_distribution(), field, params,
        include_intrinsic=cfg.include_intrinsic_post,
        intrinsic=cfg.intrinsic_model(),
        seed=seed, threads=args.threads,
    )


def _cmd_sample(args, cfg: Config) -> int:
    n = args.n if args.n is not None else cfg.default_n
    seed = args.seed if args.seed is not None else cfg.default_seed
    result = _ensemble_for_phase(args, cfg, n, seed)
    s = result.samples
    table = np.column_stack(
        [
            np.arange(len(s), dtype=float),
            s.x_nm, s.y_nm, s.depth_nm,
            s.orientation_id.astype(float),
            s.eps_crystal,
            s.gss_ghz,
        ]
    )
    header = ("index,x_nm,y_nm,depth_nm,orientation_id,"
              "eps_xx,eps_yy,eps_zz,eps_xy,eps_yz,eps_zx,gss_ghz")
    buf = []
    fmt = ["%d", "%.17g", "%.17g", "%.17g", "%d"] + ["%.17g"] * 7
    for row in table:
        buf.append(",".join(f % v for f, v in zip(fmt, row)))
    _write_atomic(Path(args.out), header + "\n" + "\n".join(buf) + "\n")
    summary = result.summary
    sys.stdout.write(
        _json_text(
            {
                "phase": args.phase,
                "n": summary.n,
                "seed": seed,
                "mean_ghz": summary.mean_ghz,
                "std_ghz": summary.std_ghz,
                "sem_ghz": summary.sem_ghz,
                "out": str(args.out),
            }
        )
    )
    return 0


def _cmd_calibrate(args, cfg: Config) -> int:
    n = args.n if args.n is not None else cfg.default_n
    seed = args.seed if args.seed is not None else cfg.default_seed
    params = cfg.siv_parameters()
    if args.what == "sigma":
        sigma = calibrate_sigma(
            args.target_ghz, n, seed, params,
            sample_frame=cfg.sample_frame, threads=args.threads,
        )
        payload = {"what": "sigma", "target_ghz": args.target_ghz,
                   "n": n, "seed": seed, "sigma_unstrained": sigma}
    else:
        stress = calibrate_film_stress(
            args.target_ghz, cfg.layer_stack(), cfg.position_distribution(),
            params, n, seed,
            include_intrinsic=cfg.include_intrinsic_post,
            intrinsic=cfg.intrinsic_model(),
            threads=args.threads,
        )
        payload = {"what": "stress", "target_ghz": args.target_ghz,
                   "n": n, "seed": seed, "film_stress_mpa": stress}
    sys.stdout.write(_json_text(payload))
    return 0


def _cmd_top(args, cfg: Config) -> int:
    t_op = operational_temperature(
        args.gss_ghz, cfg.thermal_reference(), cfg.occupation_model
    )
    sys.stdout.write(f"{t_op:.4f} K\n")
    return 0


def report(cfg: Config, seed: int, n: int | None = None,
           threads: int | None = None, out_dir: str | Path = ".") -> dict:
    """Run the full calibrated-model pipeline and write the figure data.

    Calibrates the intrinsic strain spread to the pre-deposition measured
    mean and the film stress to the post-deposition one, draws both
    ensembles, solves per-emitter operating temperatures, and emits
    gss_pdf.csv, top_vs_gss.csv, operability.csv, and summary.json.
    """
    n = n if n is not None else cfg.default_n
    params = cfg.siv_parameters()
    ref = cfg.thermal_reference()
    model = cfg.occupation_model
    out_dir = Path(out_dir)

    sigma = calibrate_sigma(
        PRE_TARGET_MEAN_GHZ, n, seed, params,
        sample_frame=cfg.sample_frame, threads=threads,
    )
    intrinsic = IntrinsicStrainModel(sigma)
    pre = sample_pre_deposition(
        n, intrinsic, params, seed, sample_frame=cfg.sample_frame, threads=threads
    )

    stack = cfg.layer_stack()
    pos = cfg.position_distribution()
    stress = calibrate_film_stress(
        POST_TARGET_MEAN_GHZ, stack, pos, params, n, seed,
        include_intrinsic=cfg.include_intrinsic_post, intrinsic=intrinsic,
        threads=threads,
    )
    stack = replace(stack, film=replace(stack.film, intrinsic_stress_mpa=stress))
    field = solve_beam_state(stack)
    post = sample_post_deposition(
        n, pos, field, params,
        include_intrinsic=cfg.include_intrinsic_post, intrinsic=intrinsic,
        seed=seed, threads=threads,
    )

    top_pre = operational_temperature_batch(pre.samples.gss_ghz, ref, model, threads)
    top_post = operational_temperature_batch(post.samples.gss_ghz, ref, model, threads)

    # shared-grid densities
    hi = 50.0 * math.ceil(max(pre.samples.gss_ghz.max(), post.samples.gss_ghz.max()) / 50.0)
    edges = np.linspace(0.0, hi, GSS_PDF_BINS + 1)
    pre_density, _ = np.histogram(pre.samples.gss_ghz, bins=edges, density=True)
    post_density, _ = np.histogram(post.samples.gss_ghz, bins=edges, density=True)
    lines = ["bin_left_ghz,bin_right_ghz,pre_density,post_density"]
    for i in range(GSS_PDF_BINS):
        lines.append(
            f"{_fmt(edges[i])},{_fmt(edges[i + 1])},"
            f"{_fmt(pre_density[i])},{_fmt(post_density[i])}"
        )
    _write_atomic(out_dir / "gss_pdf.csv", "\n".join(lines) + "\n")

    top_curve = operational_temperature_batch(TOP_CURVE_GSS_GHZ, ref, model, threads)
    lines = ["gss_ghz,t_op_k"]
    for g, t in zip(TOP_CURVE_GSS_GHZ, top_curve):
        lines.append(f"{_fmt(g)},{_fmt(t)}")
    _write_atomic(out_dir / "top_vs_gss.csv", "\n".join(lines) + "\n")

    curve_pre = operability_curve(pre, OPERABILITY_TEMPS_K, ref, model, threads)
    curve_post = operability_curve(post, OPERABILITY_TEMPS_K, ref, model, threads)
    lines = ["temp_k,p_pre,p_post"]
    for (t, p_pre), (_, p_post) in zip(curve_pre, curve_post):
        lines.append(f"{_fmt(t)},{_fmt(p_pre)},{_fmt(p_post)}")
    _write_atomic(out_dir / "operability.csv", "\n".join(lines) + "\n")

    summary = {
        "schema_version": SCHEMA_VERSION,
        "backend": _kernels.active_backend(),
        "seed": seed,
        "n": n,
        "sigma_unstrained_calibrated": sigma,
        "film_stress_mpa_calibrated": stress,
        "pre_mean_ghz": pre.summary.mean_ghz,
        "pre_std_ghz": pre.summary.std_ghz,
        "pre_sem_ghz": pre.summary.sem_ghz,
        "post_mean_ghz": post.summary.mean_ghz,
        "post_std_ghz": post.summary.std_ghz,
        "post_sem_ghz": post.summary.sem_ghz,
        "p_top_ge_1p5k": float(np.mean(top_post >= 1.5)),
        "p_top_ge_2p0k": float(np.mean(top_post >= 2.0)),
        "pre_p_top_ge_1p5k": float(np.mean(top_pre >= 1.5)),
    }
    _write_atomic(out_dir / "summary.json", _json_text(summary))
    return summary


def _cmd_report(args, cfg: Config) -> int:
    seed = args.seed if args.seed is not None else cfg.default_seed
    summary = report(cfg, seed, args.n, args.threads, args.out_dir)
    sys.stdout.write(_json_text(summary))
    return 0


def _cmd_spectra(args, cfg: Config) -> int:
    directory = Path(args.dir)
    if not directory.is_dir():
        raise StrainforgeError(f"not a directory: {directory}")
    files = sorted(directory.glob("*.csv"))
    if not files:
        raise StrainforgeError(f"no .csv spectra found in {directory}")
    batch = [
        spectra.load_spectrum(f, label=f.name, batch_tag=args.batch_tag)
        for f in files
    ]
    window = cfg.smoothing_window
    prominence = cfg.min_prominence

    records = []
    for spec in batch:
        assignment = spectra.classify_and_extract(
            spectra.detect_peaks(spec, window, prominence)
        )
        records.append(
            {
                "file": spec.label,
                "batch_tag": spec.batch_tag,
                "n_peaks": len(assignment.peaks),
                "is_single_emitter": assignment.is_single_emitter,
                "gss_ghz": assignment.gss_ghz,
                "peaks": [
                    {
                        "center_ghz": p.center_ghz,
                        "height": p.height,
                        "prominence": p.prominence,
                        "width_ghz": p.width_ghz,
                    }
                    for p in assignment.peaks
                ],
            }
        )

    try:
        stats = spectra.batch_gss_stats(batch, window, prominence)
        gss_stats = {
            "n_spectra": stats.n_spectra,
            "n_single_emitters": stats.n_single_emitters,
            "n_gss_values": int(stats.summary.n),
            "mean_ghz": stats.summary.mean_ghz,
            "std_ghz": stats.summary.std_ghz,
            "sem_ghz": stats.summary.sem_ghz,
        }
    except NoSingleEmitters:
        gss_stats = None

    out_path = Path(args.out)
    payload = {
        "schema_version": SCHEMA_VERSION,
        "batch_tag": args.batch_tag,
        "records": records,
        "gss_stats": gss_stats,
    }
    _write_atomic(out_path, _json_text(payload))

    pooled = spectra.pool_transitions(batch, window, prominence)
    lines = ["batch_tag,bin_left_ghz,bin_right_ghz,density"]
    for tag in sorted(pooled):
        hist = pooled[tag]
        for i in range(len(hist.density)):
            lines.append(
                f"{tag},{_fmt(hist.edges_ghz[i])},"
                f"{_fmt(hist.edges_ghz[i + 1])},{_fmt(hist.density[i])}"
            )
    pooled_path = out_path.with_name(out_path.stem + "_pooled.csv")
    _write_atomic(pooled_path, "\n".join(lines) + "\n")
    sys.stdout.write(_json_text({"out": str(out_path), "pooled": str(pooled_path)}))
    return 0


_COMMANDS = {
    "mechanics": _cmd_mechanics,
    "sample": _cmd_sample,
    "calibrate": _cmd_calibrate,
    "top": _cmd_top,
    "report": _cmd_report,
    "spectra": _cmd_spectra,
}


def run(argv: list[str]) -> int:
    """Entry point as a function; returns the exit status."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = load_config(getattr(args, "config", None))
        return _COMMANDS[args.command](args, cfg)
    except StrainforgeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
