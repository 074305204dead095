from __future__ import annotations

import numpy as np
import pytest

from element_analysis.errors import ConfigurationError
from element_analysis.pipeline import AnalysisConfig, event_regions, infer, reconstruct, run
from element_analysis.synth import paper_synthetic


def test_config_validation_and_round_trip():
    cfg = AnalysisConfig(beta=3.0, lam=0.75)
    assert AnalysisConfig.from_dict(cfg.to_dict()) == cfg
    with pytest.raises(ConfigurationError):
        AnalysisConfig.from_dict({"betta": 2})
    for bad in ({"lam": 1.0}, {"beta": 0.0}, {"noise_mode": "auto"}, {"alpha": 3.0},
                {"rate": 0.0}, {"method": "mcmc"}):
        with pytest.raises(ConfigurationError):
            AnalysisConfig.from_dict(bad)


def test_clean_paper_signal_recovered(table_cache):
    x, tr = paper_synthetic()
    res = run(x, None, AnalysisConfig(), cache=table_cache)
    assert len(res.events) == 6
    t = np.array([e.t_hat for e in res.events])
    assert np.all(np.abs(t - tr.times) <= 1)
    c = np.array([e.c_hat for e in res.events])
    assert np.allclose(np.abs(c) / np.abs(tr.coeffs), 1, atol=0.005)
    assert np.allclose(np.angle(c / tr.coeffs), 0, atol=np.radians(1))
    rel = np.sqrt(np.mean((res.reconstruction - x) ** 2) / np.mean(x**2))
    assert rel < 0.02
    assert len(event_regions(res)) == 6


def test_missing_samples_flag_maxima(table_cache):
    x, tr = paper_synthetic()
    missing = np.zeros(x.size, bool)
    t0 = int(tr.times[2])
    missing[t0 - 150:t0 + 150] = True
    res = run(x, missing, AnalysisConfig(), cache=table_cache)
    assert not any(abs(e.t_hat - t0) < 50 for e in res.events)
    assert any("missing-data" in p.reasons for p in res.maxima)
    assert np.all(np.isnan(res.residual[missing]))


def test_gamma_mismatch_rejected():
    from element_analysis.maxima import MaximumPoint
    from element_analysis.morse import ElementSpec, WaveletSpec
    p = MaximumPoint(10, 3, 0.1, 1 + 0j, 1.0)
    with pytest.raises(ConfigurationError):
        infer(p, WaveletSpec(2, 2), ElementSpec(1, 3))


def test_reconstruct_empty():
    assert np.all(reconstruct([], None, 50) == 0)
