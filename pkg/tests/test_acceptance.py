"""Acceptance gate: nine numbered criteria, one printed pass/fail line each.

Each test computes its verdict, prints exactly one line of the form
``[criterion k] <name>: PASS/FAIL (<elapsed>)``, and then asserts it.
Geometries differ per criterion where the underlying claims demand
incompatible radius-to-distance regimes (see the well-separated vs tight
codebooks below).
"""

import json
import time

import numpy as np
import pytest
from scipy.optimize import minimize

from simlab import (
    Codebook,
    CodebookConfig,
    PipelineConfig,
    attack_size_bound,
    build_codebook,
    classify,
    detect,
    estimate_robustness,
    finite_difference_jacobian,
    fragility_ratio,
    guarantee_radius,
    misdirection_rate,
    projection_tail_check,
    run_pipeline,
    sample_compressor,
    targeted_attack,
)
from simlab.cli import main as cli_main
from simlab.ratio import random_linear_map, secant_rate

N, M = 1000, 50


def _verdict(num, name, ok, elapsed, detail=""):
    line = f"[criterion {num}] {name}: {'PASS' if ok else 'FAIL'} ({elapsed:.1f} s)"
    if detail:
        line += f" {detail}"
    print(line, flush=True)
    assert ok, line


@pytest.fixture(scope="module")
def wide_cb():
    """Inter-label distances dwarf the sphere radius: attack-norm scaling
    and guaranteed detection live in this regime."""
    return build_codebook(
        CodebookConfig(dimension=N, n_labels=5, n_nuisances=3, separation=1.0, anchor_scale=32.0, seed=11)
    )


@pytest.fixture(scope="module")
def tight_cb():
    """Distances a small multiple of the sphere radius: the robustness-gap
    regime, where random perturbations several times the attack norm are
    still harmless."""
    return build_codebook(
        CodebookConfig(dimension=N, n_labels=5, n_nuisances=3, separation=1.0, anchor_scale=1.4, seed=11)
    )


def test_criterion_1_projector_laws():
    t0 = time.perf_counter()
    shapes = [(10, 100), (50, 1000), (100, 1000)]
    ok = True
    for k in range(100):
        m, n = shapes[k % 3]
        lc = sample_compressor(m, n, seed=k)
        P = lc.P_
        sym = float(np.max(np.abs(P - P.T)))
        idem = float(np.linalg.norm(P @ P - P))
        ev = np.linalg.eigvalsh(P)
        rank = int(np.sum(ev > 0.5))
        ok &= sym <= 1e-9 and idem <= 1e-8 and rank == m
    elapsed = time.perf_counter() - t0
    _verdict(1, "projector laws", ok and elapsed < 30, elapsed)


def test_criterion_2_projection_concentration():
    t0 = time.perf_counter()
    trials = 100_000
    rep = projection_tail_check(100, 1000, 0.5, trials, seed=0, threads=2)
    se_lo = 3 * np.sqrt(rep.bound_lower * (1 - rep.bound_lower) / trials)
    se_hi = 3 * np.sqrt(rep.bound_upper * (1 - rep.bound_upper) / trials)
    ok = (
        rep.empirical_lower_tail <= rep.bound_lower + se_lo
        and rep.empirical_upper_tail <= rep.bound_upper + se_hi
        and abs(rep.median_ratio - np.sqrt(0.1)) <= 0.02 * np.sqrt(0.1)
    )
    elapsed = time.perf_counter() - t0
    _verdict(
        2, "projection concentration", ok and elapsed < 300, elapsed,
        f"lower {rep.empirical_lower_tail:.2e}<= {rep.bound_lower:.2e}, "
        f"upper {rep.empirical_upper_tail:.3f}<= {rep.bound_upper:.3f}, "
        f"median {rep.median_ratio:.4f}",
    )


def test_criterion_3_targeted_attack(wide_cb):
    t0 = time.perf_counter()
    cb = wide_cb
    eps = 0.3
    ratios, bound_violations, successes, feasible = [], 0, 0, 0
    master = np.random.default_rng(100)
    for k in range(500):
        lc = sample_compressor(M, N, seed=1000 + k)
        noise = master.standard_normal(N)
        x = cb.codeword(1, 1).signal + 0.3 * cb.sphere_radius * noise / np.linalg.norm(noise)
        target = 2 + k % 4
        pert = targeted_attack(lc, cb, x, target)
        if pert.note:
            continue
        feasible += 1
        successes += classify(lc, cb, x + pert.w).outcome == target
        _, dist = cb.nearest_codeword(x, target)
        ratios.append(pert.norm / dist)
        if pert.norm > attack_size_bound(lc, cb, x, target, eps):
            bound_violations += 1
    mean_ratio = float(np.mean(ratios))
    ref = np.sqrt(M / N)
    bound_cap = np.exp(-M * eps**2 / 12)
    cap = bound_cap + 3 * np.sqrt(bound_cap * (1 - bound_cap) / feasible)
    ok = (
        feasible > 0
        and successes == feasible
        and 0.9 * ref <= mean_ratio <= 1.1 * ref
        and bound_violations / feasible <= cap
    )
    elapsed = time.perf_counter() - t0
    _verdict(
        3, "targeted attack scaling", ok, elapsed,
        f"success {successes}/{feasible}, mean ratio {mean_ratio:.4f} in "
        f"[{0.9 * ref:.4f}, {1.1 * ref:.4f}], bound violations {bound_violations}",
    )


def test_criterion_4_robustness_gap(tight_cb):
    t0 = time.perf_counter()
    cb = tight_cb
    x = cb.codeword(1, 1).signal
    # mean targeted-attack norm over fresh compressors and all wrong labels
    norms = []
    for k in range(25):
        lc = sample_compressor(M, N, seed=2000 + k)
        for target in range(2, 6):
            pert = targeted_attack(lc, cb, x, target)
            if not pert.note:
                norms.append(pert.norm)
    w_bar = float(np.mean(norms))
    l = 3 * w_bar

    lc = sample_compressor(M, N, seed=7)
    est = estimate_robustness(lc, cb, x, l, 10_000, seed=50)

    # the misdirection radius must sit below the analytic threshold at eps=0.2
    eps = 0.2
    _, dist = cb.nearest_codeword(x, 2)
    threshold = np.sqrt((1 - eps) / (1 + eps)) * dist - cb.sphere_radius / (
        np.sqrt(1 + eps) * np.sqrt(M / N)
    )
    mis = misdirection_rate(lc, cb, x, 2, l, 10_000, seed=51)
    ok = est.survive_fraction >= 0.99 and l < threshold and mis <= 0.01
    elapsed = time.perf_counter() - t0
    _verdict(
        4, "robustness gap", ok and elapsed < 600, elapsed,
        f"l={l:.3f} (3 x {w_bar:.3f}), survive {est.survive_fraction:.4f}, "
        f"misdirection {mis:.4f} at threshold {threshold:.3f}",
    )


def test_criterion_5_detection_guarantee(wide_cb):
    t0 = time.perf_counter()
    cb = wide_cb
    master = np.random.default_rng(500)
    checked = flagged = 0
    k = 0
    while checked < 1000:
        k += 1
        lc = sample_compressor(M, N, seed=5000 + k)
        noise = master.standard_normal(N)
        label = 1 + k % 5
        x = cb.codeword(label, 1).signal + 0.3 * cb.sphere_radius * noise / np.linalg.norm(noise)
        target = 1 + label % 5  # next label cyclically, never the base label
        pert = targeted_attack(lc, cb, x, target)
        if pert.note or pert.norm >= guarantee_radius(cb, x, target):
            continue
        y = x + pert.w
        out = classify(lc, cb, y).outcome
        if out != target:
            continue
        checked += 1
        flagged += detect(cb, y, out).flagged
    ok = checked == 1000 and flagged == checked  # zero tolerance
    elapsed = time.perf_counter() - t0
    _verdict(5, "detection guarantee", ok, elapsed, f"{flagged}/{checked} flagged")


def test_criterion_6_ratio_floor():
    t0 = time.perf_counter()
    n, m = 2000, 50
    floor = 0.9 * np.sqrt((n + m) / m)
    hits = 0
    for k in range(100):
        map_ = random_linear_map(n, m, seed=k)
        rep = fragility_ratio(map_, np.zeros(n), trials=200, seed=k)
        hits += rep.ratio >= floor
    # linear-map secant rates are epsilon-free to machine precision
    map_ = random_linear_map(200, 10, seed=0)
    g = np.random.default_rng(0)
    x, o = g.standard_normal(200), g.standard_normal(200)
    secant_ok = abs(secant_rate(map_, x, o, 1e-2) - secant_rate(map_, x, o, 1e-6)) <= 1e-9 * secant_rate(
        map_, x, o, 1e-2
    )
    J_fd = finite_difference_jacobian(map_, x, 1e-5)
    fd_ok = float(np.max(np.abs(J_fd - map_.jacobian_at(x)))) <= 1e-4
    ok = hits >= 95 and secant_ok and fd_ok
    elapsed = time.perf_counter() - t0
    _verdict(6, "worst/average ratio floor", ok, elapsed, f"{hits}/100 seeds >= {floor:.3f}")


def test_criterion_7_pipeline_separation():
    t0 = time.perf_counter()
    trials, summary = run_pipeline(PipelineConfig())
    attacked_ok = all(t.flagged and t.rho_max < 0.4 for t in trials if t.attacked and t.feasible)
    clean_ok = all(
        not t.flagged for t in trials if not t.attacked and t.decoded == t.sentence_id + 1
    )
    ok = (
        summary["feasible_attacks"] == summary["attacked_trials"]
        and summary["clean_correct_decodes"] == summary["clean_trials"]
        and attacked_ok
        and clean_ok
        and summary["separation"] >= 0.2
    )
    elapsed = time.perf_counter() - t0
    _verdict(
        7, "pipeline separation", ok and elapsed < 120, elapsed,
        f"feasible {summary['feasible_attacks']}/{summary['attacked_trials']}, "
        f"separation {summary['separation']:.3f}",
    )


def test_criterion_8_reproducibility(tmp_path, capsys):
    t0 = time.perf_counter()
    outputs = []
    specs = [
        ("conc", ["concentration", "check", "--m", "10", "--n", "50", "--eps", "0.5", "--trials", "2000"]),
        ("rob", [
            "robustness", "sweep", "--n", "200", "--m", "20", "--anchor-scale", "1.4",
            "--l-grid", "0.5,1.0", "--trials", "500",
        ]),
        ("pipe", ["pipeline", "run", "--config", str(tmp_path / "cfg.json")]),
    ]
    (tmp_path / "cfg.json").write_text(
        json.dumps({"num_sentences": 3, "waveform_length": 16384, "compressed_dim": 4, "classifier_radius": 2.0})
    )
    ok = True
    for name, args in specs:
        files = []
        for run, threads in (("a", "1"), ("b", "4")):
            path = tmp_path / f"{name}_{run}.csv"
            code = cli_main(["--threads", threads, *args, "--csv", str(path)])
            capsys.readouterr()
            ok &= code == 0
            files.append(path.read_bytes())
        ok &= files[0] == files[1]
    elapsed = time.perf_counter() - t0
    _verdict(8, "byte-identical reruns", ok, elapsed)


@pytest.mark.filterwarnings("ignore:m > n/2")  # tiny instances are deliberately weakly compressed
def test_criterion_9_small_instance_oracle():
    t0 = time.perf_counter()
    margin = 0.99
    checked = mismatches = 0
    seed = 0
    while checked < 50 and seed < 400:
        seed += 1
        g = np.random.default_rng(seed)
        n = int(g.integers(6, 13))
        m = int(g.integers(2, 5))
        if m >= n:
            continue
        signals = np.stack([np.zeros(n), 4.0 * g.standard_normal(n)])
        try:
            cb = Codebook.from_signals(signals, sphere_radius=0.5)
        except ValueError:
            continue
        lc = sample_compressor(m, n, seed=seed)
        x = 0.1 * g.standard_normal(n)
        pert = targeted_attack(lc, cb, x, target=2, margin=margin)
        if pert.note or pert.norm < 1e-6:
            continue
        c = signals[1]
        cons = {
            "type": "ineq",
            "fun": lambda w: (cb.sphere_radius * margin) ** 2 - np.sum((lc.Q_.T @ (x + w - c)) ** 2),
        }
        res = minimize(
            lambda w: np.sum(w**2),
            x0=np.zeros(n),
            constraints=[cons],
            method="SLSQP",
            options={"maxiter": 1000, "ftol": 1e-14},
        )
        if not res.success:
            continue
        checked += 1
        if abs(np.sqrt(res.fun) - pert.norm) > 1e-3 * pert.norm:
            mismatches += 1
    ok = checked == 50 and mismatches == 0
    elapsed = time.perf_counter() - t0
    _verdict(9, "small-instance oracle equivalence", ok, elapsed, f"{checked - mismatches}/{checked} within 1e-3")
