"""Property-based checks of the core invariants."""

from __future__ import annotations

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from element_analysis.cwt import build_grid, scaling_check, transform
from element_analysis.influence import isolate
from element_analysis.maxima import MaximumPoint
from element_analysis.morse import WaveletSpec, freq_wavelet, time_wavelet
from element_analysis.noise import NoiseModel, sigma_matrix, simulate_maxima

FAST = settings(max_examples=25, deadline=None)
W22 = WaveletSpec(2.0, 2.0)

@settings(max_examples=10, deadline=None)
@given(st.floats(1.5, 8.0), st.floats(1.5, 4.0))
def test_wavelet_is_analytic(beta, gamma):
    # the inverse transform of the time-domain wavelet has no negative-frequency content
    spec = WaveletSpec(beta, gamma)
    N, dt = 4096, 0.1 / spec.omega_peak
    t = (np.arange(N) - N // 2) * dt
    psi = time_wavelet(spec, t)
    F = np.fft.fft(np.fft.ifftshift(psi)) * dt
    om = 2 * np.pi * np.fft.fftfreq(N, dt)
    neg = om < -0.05 * spec.omega_peak
    assert np.max(np.abs(F[neg])) < 2e-3 * np.max(np.abs(F))
    assert np.all(freq_wavelet(spec, -np.abs(om) - 1e-9) == 0)


@FAST
@given(st.integers(0, 2**32 - 1), st.floats(-3, 3), st.floats(-3, 3))
def test_transform_is_linear(seed, a, b):
    rng = np.random.default_rng(seed)
    x, y = rng.standard_normal((2, 512))
    g = build_grid(W22, 512)
    w = lambda v: transform(v, None, W22, g).values
    assert np.allclose(w(a * x + b * y), a * w(x) + b * w(y), atol=1e-10)


@settings(max_examples=6, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 3))
def test_scaling_invariance(seed, rho):
    rng = np.random.default_rng(seed)
    x = np.convolve(rng.standard_normal(900), np.hanning(41), mode="same")
    assert scaling_check(x, rho).max_discrepancy < 0.02


@FAST
@given(st.sampled_from([0.0, 0.5, 1.0]), st.floats(0.5, 2000.0), st.floats(1.02, 1.5),
       st.floats(1.0, 3.0), st.floats(1.5, 3.0))
def test_sigma_matrix_hermitian_psd(alpha, s, r, beta, gamma):
    S = sigma_matrix(NoiseModel(alpha), WaveletSpec(beta + alpha, gamma), s, r)
    assert np.allclose(S, S.conj().T, atol=1e-13)
    assert np.linalg.eigvalsh(S).min() > -1e-10
    assert abs(S[0, 0] - 1) < 1e-10


@settings(max_examples=8, deadline=None)
@given(st.integers(0, 1000), st.sampled_from(["direct", "conditional"]),
       st.sampled_from([0.0, 1.0]))
def test_survival_monotone(seed, method, alpha):
    g = build_grid(W22, 6000, eta=0.05, D=4, p=3)
    t = simulate_maxima(NoiseModel(alpha), W22, g, 5000, seed, method=method, n_bins=40,
                        scale_indices=[len(g) // 2])[0]
    assert np.all(np.diff(t.survival) <= 1e-15)
    assert np.all(t.survival >= -1e-15)


points = st.lists(st.tuples(st.integers(0, 5000), st.floats(0.01, 0.5), st.floats(0.1, 10.0),
                            st.booleans()), min_size=1, max_size=30)


@FAST
@given(points, st.sampled_from([0.25, 0.5, 0.75]))
def test_isolation_idempotent(raw, lam):
    pts = [MaximumPoint(t, 3, om, mag + 0j, mag, edge=edge) for t, om, mag, edge in raw]
    once = [(p.t_index, p.isolated) for p in isolate(pts, lam, 2.0, 1.0, 2.0)]
    twice = [(p.t_index, p.isolated) for p in isolate(pts, lam, 2.0, 1.0, 2.0)]
    assert once == twice
    # the largest participating maximum is always isolated
    active = [p for p in pts if not p.edge]
    if active:
        top = max(active, key=lambda p: (p.magnitude, -p.t_index))
        assert top.isolated
