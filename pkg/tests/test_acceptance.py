"""Acceptance criteria 1 to 11.

Each criterion is a function returning ``(passed, detail)``.  Under pytest
every criterion is one test, and a PASS/FAIL line per criterion is printed
in the terminal summary.  Run the file directly to print the lines without
pytest::

    python tests/test_acceptance.py [1 2 ...]

Rate tables are cached in the directory named by ``ELEMENT_ANALYSIS_CACHE``,
or in a fresh temporary directory.
"""

from __future__ import annotations

import math
import os
import subprocess
import sys
import tempfile
import time
from functools import lru_cache
from pathlib import Path

import numpy as np
import pytest
from scipy import stats

from element_analysis.cwt import build_grid, transform
from element_analysis.influence import region_accuracy
from element_analysis.morse import ElementSpec, WaveletSpec, time_wavelet, zeta
from element_analysis.noise import (NoiseModel, RateTableCache, direct_maxima_oracle,
                                    simulate_maxima, survival_at, wavelet_spectrum)
from element_analysis.pipeline import AnalysisConfig, rate_tables, run
from element_analysis.synth import paper_synthetic, red_noise, white_noise

try:
    from conftest import record_acceptance
except ImportError:  # run as a script from elsewhere
    def record_acceptance(line: str) -> None:
        pass

W22 = WaveletSpec(2.0, 2.0)
# seed of the noise added to the synthetic event train (criteria 2, 3 and 9)
PAPER_SEED = 0
# seeds of the pure-noise runs in criterion 10, disjoint from the one above
BUDGET_SEEDS = range(1000, 1100)

CRITERIA = {}


def criterion(number: int, title: str):
    def register(fn):
        CRITERIA[number] = (title, fn)
        return fn
    return register


@lru_cache(maxsize=1)
def _cache() -> RateTableCache:
    path = os.environ.get("ELEMENT_ANALYSIS_CACHE") or tempfile.mkdtemp(prefix="ea-tables-")
    return RateTableCache(Path(path))


def _paper_grid():
    return build_grid(W22, 12000, eta=0.05, D=4.0, p=3.0)


@lru_cache(maxsize=2)
def _tables(alpha: float):
    cfg = AnalysisConfig(alpha=alpha)
    return rate_tables(cfg, NoiseModel(alpha, 1.0), _paper_grid(), _cache())


def _fmt(v, digits=4):
    return np.array2string(np.asarray(v, dtype=float), precision=digits, separator=", ")


# --------------------------------------------------------------------- criteria


@criterion(1, "closed-form transform of a Morse element matches the numerical transform")
def crit_1():
    t0 = time.perf_counter()
    element = ElementSpec(0.0, 2.0)
    M = 8192
    rho = element.omega_peak / (2 * np.pi / 100)
    n = np.arange(M)
    centre = M // 2
    x = np.real(time_wavelet(element.spec, (n - centre) / rho))
    grid = build_grid(W22, M, eta=0.05, D=4.0, p=3.0)
    plane = transform(x, None, W22, grid)
    # interior points within eight footprints of the element; farther out both sides are
    # below 1e-4 of the peak and only the periodic-extension images remain
    near = np.abs(n - centre)[:, None] <= 8 * plane.footprints[None, :]
    tau, j = np.nonzero(~plane.edge_mask & near)
    # a real input excites only the positive-frequency half of the analytic element
    expected = 0.5 * zeta((tau - centre) / rho, grid.scales(W22)[j] / rho, 2.0, 0.0, 2.0)
    err = np.abs(plane.values[tau, j] - expected)
    peak = np.abs(expected).max()
    rel_peak = err.max() / peak
    core = np.abs(expected) >= 0.1 * peak
    rel_core = float((err[core] / np.abs(expected[core])).max())
    elapsed = time.perf_counter() - t0
    ok = rel_peak <= 1e-3 and elapsed < 10
    return ok, (f"max |error| / peak = {rel_peak:.2e} over {tau.size} interior points; "
                f"pointwise relative error where |zeta| >= 10% of peak = {rel_core:.2e}; "
                f"runtime {elapsed:.1f} s")


@lru_cache(maxsize=1)
def _paper_white_run():
    x, truth = paper_synthetic()
    y = x + white_noise(x.size, 1.0, PAPER_SEED)
    cfg = AnalysisConfig()
    tables = _tables(0.0)
    t0 = time.perf_counter()
    res = run(y, None, cfg, tables=tables, grid=_paper_grid())
    return res, truth, x, time.perf_counter() - t0


def _event_errors(res, truth, clean):
    """Per-event errors and tolerance checks against the planted train."""
    step = math.log(res.grid.r)
    rows = []
    matched = []
    for t, rho, c in zip(truth.times, truth.rhos, truth.coeffs):
        # nearest detected event in time
        e = min(res.events, key=lambda ev: abs(ev.t_hat - t)) if res.events else None
        matched.append(e)
        if e is None:
            rows.append(None)
            continue
        d_log_w = math.log(e.omega_rho * rho / truth.element.omega_peak)
        rows.append((e.t_hat - t, d_log_w / step, e.abs_c / abs(c) - 1,
                     math.degrees(np.angle(e.c_hat / c))))
    recon_rel = float(np.sqrt(np.mean((res.reconstruction - clean) ** 2) / np.mean(clean**2)))
    return rows, recon_rel


def _tolerance_report(res, truth, clean):
    rows, recon_rel = _event_errors(res, truth, clean)
    tol = np.array([2.0, 0.5, 0.10, 15.0])
    names = ["dt", "dlogw/step", "d|c|/|c|", "dphase(deg)"]
    lines, all_ok = [], True
    for k, r in enumerate(rows):
        if r is None:
            lines.append(f"event {k + 1}: not detected")
            all_ok = False
            continue
        bad = [names[i] for i in range(4) if abs(r[i]) > tol[i]]
        all_ok &= not bad
        lines.append(f"event {k + 1}: dt={r[0]:+.0f} dlogw={r[1]:+.2f} steps d|c|={r[2]:+.3f} "
                     f"dphase={r[3]:+.1f} deg" + (f" [outside: {', '.join(bad)}]" if bad else ""))
    return all_ok, recon_rel, lines


@criterion(2, "synthetic event train in white noise recovers six events within tolerance")
def crit_2():
    res, truth, clean, elapsed = _paper_white_run()
    n_events = len(res.events)
    tol_ok, recon_rel, lines = _tolerance_report(res, truth, clean)
    ok = n_events == 6 and tol_ok and recon_rel <= 0.15 and elapsed < 60
    return ok, (f"seed {PAPER_SEED}: {n_events} significant isolated events; "
                f"reconstruction RMS error {recon_rel:.3f} of clean RMS; runtime {elapsed:.1f} s; "
                + "; ".join(lines))


@criterion(3, "isolation removes exactly one duplicate maximum near event 2")
def crit_3():
    res, truth, _, _ = _paper_white_run()
    sig = [p for p in res.maxima if not p.edge and p.significant]
    removed = [p for p in sig if not p.isolated]
    near2 = [p for p in removed if abs(p.t_index - truth.times[1]) < 300]
    ok = len(sig) == 7 and len(removed) == 1 and len(near2) == 1
    where = ", ".join(f"t={p.t_index} j={p.scale_index}" for p in removed) or "none"
    return ok, (f"seed {PAPER_SEED}: {len(sig)} significant maxima before isolation, "
                f"{len(removed)} removed by isolation ({where})")


@criterion(4, "noise maxima statistics at a mid-grid scale")
def crit_4():
    grid = _paper_grid()
    j = len(grid) // 2
    t0 = time.perf_counter()
    table = simulate_maxima(NoiseModel(), W22, grid, 10_000_000, 4, method="direct",
                            n_bins=300, w_max=6.0, scale_indices=[j], threads=0)[0]
    elapsed = time.perf_counter() - t0
    mean, total, s17 = table.mean_magnitude, table.total_rate, float(survival_at(table, 1.7))
    ok = (abs(mean - 1.36) <= 0.05 and 0.040 <= total <= 0.045 and abs(s17 - 0.010) <= 0.002
          and elapsed < 300)
    return ok, (f"scale index {j}, 1e7 draws: mean w~ = {mean:.4f}, total rate = {total:.5f} "
                f"per footprint, survival(1.7) = {s17:.5f} per footprint; runtime {elapsed:.1f} s")


@criterion(5, "simulated maxima statistics agree with a direct transform of white noise")
def crit_5():
    grid = _paper_grid()
    n_bins, w_max = 60, 3.0
    oracle = direct_maxima_oracle(NoiseModel(), W22, 3, 10_000_000, 5, grid=grid, first_band=1,
                                  n_bins=n_bins, w_max=w_max)
    sim = simulate_maxima(NoiseModel(), W22, grid, 10_000_000, 6, method="direct",
                          n_bins=n_bins, w_max=w_max, scale_indices=[oracle.scale_index])[0]
    k = n_bins + 1
    expected_counts = sim.survival[:k] * oracle.n_samples / oracle.footprint
    use = expected_counts >= 100
    z = (oracle.survival[:k] - sim.survival[:k]) / sim.survival_se[:k]
    worst = float(np.abs(z[use]).max())
    ok = worst <= 3.0
    return ok, (f"band {oracle.scale_index}: {int(use.sum())} edges with >= 100 expected counts; "
                f"max |oracle - simulated| = {worst:.2f} simulator standard errors; "
                f"total rate oracle {oracle.total_rate:.5f} vs simulated {sim.total_rate:.5f}")


@criterion(6, "time-averaged wavelet power follows the noise spectrum law")
def crit_6():
    grid = _paper_grid()
    M = grid.M
    scales = grid.scales(W22)
    inner = slice(1, len(grid) - 1)
    acc = np.zeros(len(grid))
    cnt = np.zeros(len(grid))
    for seed in range(1000):
        plane = transform(white_noise(M, 1.0, seed), None, W22, grid)
        keep = ~plane.edge_mask
        acc += (np.abs(plane.values) ** 2 * keep).sum(axis=0)
        cnt += keep.sum(axis=0)
    ratio = (acc / cnt / wavelet_spectrum(NoiseModel(), W22, scales))[inner]
    red = np.zeros(len(grid))
    for seed in range(100):
        x, amp = red_noise(M, 10_000 + seed, return_amplitude=True)
        plane = transform(x / amp, None, W22, grid)
        keep = ~plane.edge_mask
        red += (np.abs(plane.values) ** 2 * keep).sum(axis=0)
    red = red / cnt
    slope = float(np.polyfit(np.log(grid.omegas[inner]), np.log(red[inner]), 1)[0])
    dev = float(np.abs(ratio - 1).max())
    ok = dev <= 0.05 and abs(slope + 1) <= 0.1
    return ok, (f"white noise, 1000 series of {M}: max |empirical/predicted - 1| = {dev:.3f} over "
                f"{ratio.size} interior scales; red noise, 100 series: log-log slope {slope:.4f}")


@criterion(7, "closed-form regions of influence match the exact level sets")
def crit_7():
    lams = (0.5, 0.75, 0.85, 0.95)
    worst, failures, exempt = 0.0, [], []
    for gamma in (1.0, 2.0, 3.0, 4.0):
        for beta in (0.5, 1.0, 2.0, 4.0, 8.0):
            for lam in lams:
                err = region_accuracy(lam, beta, 0.0, gamma, n_rays=36)
                worst = max(worst, err)
                if err > 0.05:
                    failures.append(f"(gamma={gamma:g}, beta={beta:g}, lambda={lam}) {err:.3f}")
            exempt.append(region_accuracy(0.25, beta, 0.0, gamma, n_rays=36))
    ok = not failures
    detail = (f"mu=0, gamma in 1..4, beta in 1/2..8; worst mean radial discrepancy {worst:.3f}; "
              f"lambda=0.25 (exempt) worst {max(exempt):.3f}")
    if failures:
        detail += "; above 5%: " + ", ".join(failures)
    return ok, detail


@criterion(8, "normalized noise-maxima distributions collapse across scales")
def crit_8():
    grid = _paper_grid()
    J = len(grid)
    idx = list(np.unique(np.linspace(1, J - 2, 12).round().astype(int)))
    curves = {}
    for alpha in (0.0, 1.0):
        tabs = simulate_maxima(NoiseModel(alpha), W22, grid, 200_000, 8, method="conditional",
                               n_bins=120, w_max=6.0, scale_indices=idx)
        curves[alpha] = (np.array([survival_at(t, 1.0) for t in tabs]),
                         np.array([t.total_rate for t in tabs]))
    white, white_tot = curves[0.0]
    red, red_tot = curves[1.0]
    spread_white = float((white.max() - white.min()) / np.median(white))
    spread_red = float((red.max() - red.min()) / np.median(red))
    # shape comparison: survival at w~=1 as a share of all maxima
    shape_gap = float(np.abs((red / red_tot) / (white / white_tot) - 1).max())
    level_gap = float(np.median(red) / np.median(white) - 1)
    ok = spread_white <= 0.15 and spread_red <= 0.15 and shape_gap <= 0.15
    return ok, (f"{len(idx)} interior scales, survival at w~=1 per footprint: white spread "
                f"{spread_white:.3f}, red spread {spread_red:.3f} of the median; red vs white "
                f"shape (survival/total) max gap {shape_gap:.3f}; red level above white by "
                f"{level_gap:.3f} per footprint")


@criterion(9, "synthetic event train in red noise recovers the same six events")
def crit_9():
    x, truth = paper_synthetic()
    noise, amp = red_noise(x.size, PAPER_SEED, return_amplitude=True)
    cfg = AnalysisConfig(alpha=1.0, noise_amplitude=amp)
    res = run(x + noise, None, cfg, tables=_tables(1.0), grid=_paper_grid())
    n_events = len(res.events)
    tol_ok, recon_rel, lines = _tolerance_report(res, truth, x)
    ok = n_events == 6 and tol_ok and recon_rel <= 0.15
    return ok, (f"seed {PAPER_SEED}, A = {amp:.4g}: {n_events} significant isolated events; "
                f"reconstruction RMS error {recon_rel:.3f} of clean RMS; " + "; ".join(lines))


@criterion(10, "false detections in pure white noise match the configured rate")
def crit_10():
    cfg = AnalysisConfig()
    grid = _paper_grid()
    tables = _tables(0.0)
    events = significant = 0
    usable = 0.0
    for seed in BUDGET_SEEDS:
        res = run(white_noise(grid.M, 1.0, seed), None, cfg, tables=tables, grid=grid)
        events += len(res.events)
        significant += res.counts["significant"]
        usable += res.expected_false.sum() / cfg.rate * grid.M
    n_trials = int(round(usable))
    p = cfg.rate / grid.M
    lo, hi = stats.binom.interval(0.95, n_trials, p)
    expected = n_trials * p
    ok = lo <= events <= hi
    return ok, (f"{len(BUDGET_SEEDS)} runs: {events} events ({significant} significant before "
                f"isolation); expected {expected:.2f}, binomial 95% interval [{lo:.0f}, {hi:.0f}]")


@criterion(11, "property suites pass standalone within two minutes")
def crit_11():
    path = Path(__file__).with_name("test_properties.py")
    t0 = time.perf_counter()
    proc = subprocess.run([sys.executable, "-m", "pytest", "-q", "-p", "no:cacheprovider",
                           str(path)], capture_output=True, text=True)
    elapsed = time.perf_counter() - t0
    tail = proc.stdout.strip().splitlines()[-1] if proc.stdout.strip() else proc.stderr.strip()
    ok = proc.returncode == 0 and elapsed < 120
    return ok, f"{tail}; runtime {elapsed:.1f} s"


# ---------------------------------------------------------------------- runners


def evaluate(number: int) -> tuple[bool, str]:
    title, fn = CRITERIA[number]
    ok, detail = fn()
    line = f"CRITERION {number}: {'PASS' if ok else 'FAIL'} {title}. {detail}"
    print(line)
    record_acceptance(line)
    return ok, line


def _make_test(number):
    def test():
        ok, line = evaluate(number)
        assert ok, line
    test.__name__ = f"test_criterion_{number:02d}"
    return pytest.mark.slow(test)


for _n in sorted(CRITERIA):
    globals()[f"test_criterion_{_n:02d}"] = _make_test(_n)


if __name__ == "__main__":
    wanted = [int(a) for a in sys.argv[1:]] or sorted(CRITERIA)
    results = [evaluate(n)[0] for n in wanted]
    sys.exit(0 if all(results) else 1)
