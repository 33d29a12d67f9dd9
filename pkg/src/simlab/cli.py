"""simlab command-line driver.

Every subcommand resolves its configuration (flags, optional config file,
SIMLAB_SEED override), runs the experiment, and emits a CSV whose comment
header embeds the resolved configuration.  Identical (config, seed) means
identical output bytes, regardless of --threads.
"""

import argparse
import dataclasses
import json
import os
import sys

import numpy as np

from . import detection, pipeline, ratio, robustness
from ._rng import child_rng
from .attacks import attack_size_bound, targeted_attack, untargeted_attack
from .codebook import CodebookConfig, build_codebook
from .compressor import REJECT, classify, sample_compressor
from .reporting import emit_plot_script, write_csv


def _child_seed(master, *key):
    return int(np.random.SeedSequence(entropy=master, spawn_key=key).generate_state(1)[0])


def _add_geometry(parser):
    parser.add_argument("--n", type=int, default=1000, help="ambient dimension")
    parser.add_argument("--m", type=int, default=50, help="compressed dimension")
    parser.add_argument("--labels", type=int, default=5)
    parser.add_argument("--nuisances", type=int, default=3)
    parser.add_argument("--r0", type=float, default=1.0, help="separation radius")
    parser.add_argument("--r", type=float, default=None, help="sphere radius (default 0.5 r0)")
    parser.add_argument("--anchor-scale", type=float, default=None)
    parser.add_argument("--nuisance-scale", type=float, default=None)
    parser.add_argument("--seed", type=int, default=0)


def _codebook_from_args(args):
    return build_codebook(
        CodebookConfig(
            dimension=args.n,
            n_labels=args.labels,
            n_nuisances=args.nuisances,
            separation=args.r0,
            sphere_radius=args.r,
            anchor_scale=args.anchor_scale,
            nuisance_scale=args.nuisance_scale,
            seed=args.seed,
        )
    )


def _geometry_config(args):
    return {
        "n": args.n,
        "m": args.m,
        "labels": args.labels,
        "nuisances": args.nuisances,
        "r0": args.r0,
        "seed": args.seed,
    }


def _probe_point(cb, rng, noise_norm=None):
    """A point inside the sphere of codeword (1, 1)."""
    noise = rng.standard_normal(cb.dimension)
    scale = (0.3 * cb.sphere_radius if noise_norm is None else noise_norm) / np.linalg.norm(noise)
    return cb.codeword(1, 1).signal + scale * noise


def _cmd_codebook_gen(args):
    cb = _codebook_from_args(args)
    cb.save(args.out)
    print(f"codebook: {cb.n_labels} labels x {cb.n_nuisances} nuisances in R^{cb.dimension}")
    print(f"min cross-label distance {cb.min_cross_label_distance():.6g} (>= {2 * args.r0:.6g})")
    print(f"written to {args.out}")
    return 0


def _cmd_compressor_gen(args):
    lc = sample_compressor(args.m, args.n, args.seed)
    sv = np.linalg.svd(lc.P_, compute_uv=False)
    print(f"compressor m={args.m} n={args.n} seed={args.seed}")
    print(f"projector rank {int(np.sum(sv > 0.5))}, ||P^2-P||_F = {np.linalg.norm(lc.P_ @ lc.P_ - lc.P_):.3g}")
    if args.out:
        with open(args.out, "w") as fh:
            json.dump({"m": args.m, "n": args.n, "seed": args.seed}, fh, indent=2, sort_keys=True)
        print(f"written to {args.out}")
    return 0


def _cmd_attack(args):
    cb = _codebook_from_args(args)
    rows = []
    for k in range(args.trials):
        lc = sample_compressor(args.m, args.n, _child_seed(args.seed, 1, k))
        x = _probe_point(cb, child_rng(args.seed, 2, k))
        if args.mode == "targeted":
            pert = targeted_attack(lc, cb, x, args.target, margin=args.margin)
            _, dist = cb.nearest_codeword(x, args.target)
            rows.append(
                {
                    "trial": k,
                    "dist_ambient": dist,
                    "dist_projected": lc.projected_norm(
                        cb.nearest_codeword(x, args.target)[0].signal - x
                    ),
                    "w_norm": pert.norm,
                    "bound": attack_size_bound(lc, cb, x, args.target, args.eps),
                    "success": classify(lc, cb, x + pert.w).outcome == args.target,
                }
            )
        else:
            pert = untargeted_attack(lc, cb, x, margin=args.margin)
            base = classify(lc, cb, x).outcome
            rows.append(
                {
                    "trial": k,
                    "w_norm": pert.norm,
                    "success": classify(lc, cb, x + pert.w).outcome != base,
                }
            )
    config = _geometry_config(args) | {"mode": args.mode, "margin": args.margin, "trials": args.trials}
    if args.mode == "targeted":
        config |= {"target": args.target, "eps": args.eps}
    write_csv(args.csv, rows, config)
    n_ok = sum(r["success"] for r in rows)
    print(f"{args.mode} attack: {n_ok}/{len(rows)} successful; csv -> {args.csv}")
    return 0


def _cmd_robustness(args):
    cb = _codebook_from_args(args)
    lc = sample_compressor(args.m, args.n, _child_seed(args.seed, 1))
    x = _probe_point(cb, child_rng(args.seed, 2))
    grid = [float(v) for v in args.l_grid.split(",")]
    rows = []
    for i, l in enumerate(grid):
        est = robustness.estimate_robustness(
            lc, cb, x, l, args.trials, _child_seed(args.seed, 3, i), threads=args.threads
        )
        rows.append(
            {
                "l": l,
                "trials": est.trials,
                "survive_fraction": est.survive_fraction,
                "epsilon_hat": est.epsilon_hat,
                "ci_halfwidth": est.confidence_halfwidth,
            }
        )
    write_csv(args.csv, rows, _geometry_config(args) | {"trials": args.trials, "l_grid": args.l_grid})
    print(f"robustness sweep over {len(grid)} radii; csv -> {args.csv}")
    return 0


def _cmd_concentration(args):
    report = robustness.projection_tail_check(
        args.m, args.n, args.eps, args.trials, args.seed, threads=args.threads
    )
    row = {
        "epsilon": report.epsilon,
        "m": report.m,
        "n": report.n,
        "trials": report.trials,
        "empirical_lower_tail": report.empirical_lower_tail,
        "bound_lower": report.bound_lower,
        "empirical_upper_tail": report.empirical_upper_tail,
        "bound_upper": report.bound_upper,
        "bound_upper_alt": report.bound_upper_alt,
        "median_ratio": report.median_ratio,
        "expected_ratio": report.expected_ratio,
    }
    if args.csv:
        write_csv(args.csv, [row], {"m": args.m, "n": args.n, "eps": args.eps, "trials": args.trials, "seed": args.seed})
    print(
        f"lower tail {report.empirical_lower_tail:.3g} <= bound {report.bound_lower:.3g}: "
        f"{'ok' if report.empirical_lower_tail <= report.bound_lower + 3 * report.lower_halfwidth else 'VIOLATED'}"
    )
    print(
        f"upper tail {report.empirical_upper_tail:.3g} <= bound {report.bound_upper:.3g}: "
        f"{'ok' if report.empirical_upper_tail <= report.bound_upper + 3 * report.upper_halfwidth else 'VIOLATED'}"
    )
    print(f"median ratio {report.median_ratio:.4g} (expected {report.expected_ratio:.4g})")
    return 0


def _cmd_ratio(args):
    rows = []
    for k in range(args.seeds):
        map_ = ratio.MAP_ZOO[args.map](args.n, args.m, _child_seed(args.seed, 1, k))
        x = 0.5 * child_rng(args.seed, 2, k).standard_normal(args.n)
        report = ratio.fragility_ratio(map_, x, args.trials, _child_seed(args.seed, 3, k))
        rows.append(
            {
                "seed": k,
                "alpha_rate": report.alpha_rate,
                "beta_rate_mean": report.beta_rate_mean,
                "ratio": report.ratio,
                "floor_general": report.theoretical_floor_general,
                "floor_gaussian": report.theoretical_floor_gaussian,
                "passes_general": report.passes_general_floor(),
                "passes_gaussian": report.passes_gaussian_floor(),
            }
        )
    config = {"map": args.map, "n": args.n, "m": args.m, "trials": args.trials, "seeds": args.seeds, "seed": args.seed}
    write_csv(args.csv, rows, config)
    ratios = [r["ratio"] for r in rows]
    print(f"{args.map}: ratio mean {np.mean(ratios):.4g}, min {min(ratios):.4g}; csv -> {args.csv}")
    return 0


def _cmd_detect_run(args):
    cb = _codebook_from_args(args)
    lc = sample_compressor(args.m, args.n, _child_seed(args.seed, 1))
    threshold = args.threshold if args.threshold is not None else cb.sphere_radius
    rows = []
    for k in range(args.trials):
        rng = child_rng(args.seed, 2, k)
        x = _probe_point(cb, rng)
        base = classify(lc, cb, x)
        if base.rejected:
            continue
        verdict = detection.detect(cb, x, base.outcome, threshold)
        rows.append({"trial": k, "kind": "clean", "residual": verdict.residual, "flagged": verdict.flagged})
        target = 1 + (base.outcome % cb.n_labels)
        pert = targeted_attack(lc, cb, x, target)
        y = x + pert.w
        out = classify(lc, cb, y).outcome
        if out != REJECT:
            verdict = detection.detect(cb, y, out, threshold)
            rows.append({"trial": k, "kind": "attacked", "residual": verdict.residual, "flagged": verdict.flagged})
    write_csv(args.csv, rows, _geometry_config(args) | {"threshold": threshold, "trials": args.trials})
    caught = sum(r["flagged"] for r in rows if r["kind"] == "attacked")
    total = sum(1 for r in rows if r["kind"] == "attacked")
    print(f"detection at threshold {threshold:.4g}: {caught}/{total} attacks flagged; csv -> {args.csv}")
    return 0


def _cmd_detect_roc(args):
    cb = _codebook_from_args(args)
    lc = sample_compressor(args.m, args.n, _child_seed(args.seed, 1))
    rows = detection.detection_roc(lc, cb, args.trials, _child_seed(args.seed, 2))
    write_csv(args.csv, rows, _geometry_config(args) | {"trials": args.trials})
    print(f"roc grid with {len(rows)} thresholds; csv -> {args.csv}")
    return 0


def _cmd_pipeline_run(args):
    fields = {}
    if args.config:
        with open(args.config) as fh:
            fields = json.load(fh)
    for name in ("seed",):
        value = getattr(args, name, None)
        if value is not None:
            fields[name] = value
    cfg = pipeline.PipelineConfig(**fields)
    if _env_seed() is not None:
        cfg = dataclasses.replace(cfg, seed=_env_seed())
    trials, summary = pipeline.run_pipeline(cfg)
    rows = [
        {
            "sentence_id": t.sentence_id,
            "attacked": t.attacked,
            "feasible": t.feasible,
            "decoded": t.decoded,
            "rho_max": t.rho_max,
            "flagged": t.flagged,
            "snr_measured": t.channel_snr_db,
            "attack_snr_measured": t.attack_snr_db,
        }
        for t in trials
    ]
    write_csv(args.csv, rows, dataclasses.asdict(cfg))
    for key in sorted(summary):
        print(f"{key}: {summary[key]}")
    if args.plot_script:
        emit_plot_script(args.csv, "fig4", args.plot_script, threshold=cfg.correlation_threshold)
        print(f"plot script -> {args.plot_script}")
    return 0


def _cmd_report_plot(args):
    emit_plot_script(args.csv, args.kind, args.out)
    print(f"plot script -> {args.out}")
    return 0


def _env_seed():
    raw = os.environ.get("SIMLAB_SEED")
    return int(raw) if raw else None


def build_parser():
    parser = argparse.ArgumentParser(prog="simlab", description=__doc__)
    parser.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("codebook").add_subparsers(dest="action", required=True).add_parser("gen")
    _add_geometry(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_codebook_gen)

    p = sub.add_parser("compressor").add_subparsers(dest="action", required=True).add_parser("gen")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_compressor_gen)

    attack_sub = sub.add_parser("attack").add_subparsers(dest="mode", required=True)
    for mode in ("targeted", "untargeted"):
        p = attack_sub.add_parser(mode)
        _add_geometry(p)
        p.add_argument("--margin", type=float, default=0.99 if mode == "targeted" else 0.05)
        p.add_argument("--trials", type=int, default=100)
        p.add_argument("--csv", required=True)
        if mode == "targeted":
            p.add_argument("--target", type=int, default=2)
            p.add_argument("--eps", type=float, default=0.3)
        p.set_defaults(func=_cmd_attack)

    p = sub.add_parser("robustness").add_subparsers(dest="action", required=True).add_parser("sweep")
    _add_geometry(p)
    p.add_argument("--l-grid", default="0.5,1.0,1.5,2.0,3.0")
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--csv", required=True)
    p.set_defaults(func=_cmd_robustness)

    p = sub.add_parser("concentration").add_subparsers(dest="action", required=True).add_parser("check")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--trials", type=int, default=10000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--csv")
    p.set_defaults(func=_cmd_concentration)

    p = sub.add_parser("ratio")
    p.add_argument("--map", choices=sorted(ratio.MAP_ZOO), default="linear")
    p.add_argument("--n", type=int, default=2000)
    p.add_argument("--m", type=int, default=50)
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--seeds", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--csv", required=True)
    p.set_defaults(func=_cmd_ratio)

    detect_sub = sub.add_parser("detect").add_subparsers(dest="action", required=True)
    p = detect_sub.add_parser("run")
    _add_geometry(p)
    p.add_argument("--threshold", type=float, default=None)
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--csv", required=True)
    p.set_defaults(func=_cmd_detect_run)
    p = detect_sub.add_parser("roc")
    _add_geometry(p)
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--csv", required=True)
    p.set_defaults(func=_cmd_detect_roc)

    p = sub.add_parser("pipeline").add_subparsers(dest="action", required=True).add_parser("run")
    p.add_argument("--config", help="JSON file with pipeline settings")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--csv", default="pipeline.csv")
    p.add_argument("--plot-script", default=None)
    p.set_defaults(func=_cmd_pipeline_run)

    p = sub.add_parser("report").add_subparsers(dest="action", required=True).add_parser("plot")
    p.add_argument("--csv", required=True)
    p.add_argument("--kind", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_report_plot)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if _env_seed() is not None and hasattr(args, "seed"):
        args.seed = _env_seed()
    try:
        return args.func(args)
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"simlab: error: {exc}", file=sys.stderr)
        return 1
    except RuntimeError as exc:
        print(f"simlab: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
