import numpy as np
import pytest

from bdagar.config import McmcConfig, RunConfig
from bdagar.utils import definitions
from bdagar.utils import functions


def test_scope():
    assert set(functions.__all__) <= set(functions.__dir__())
    assert 'FIT_FILES' in definitions.__dir__()
    assert definitions.MODEL_KIND == {'bdagar': 'dagar', 'gmcar': 'car'}


def test_unit_transforms_invert():
    rho = np.array([1e-6, 0.3, 0.5, 0.999])
    assert np.allclose(functions.to_unit(functions.from_unit(rho)), rho, rtol=1e-12)
    assert functions.from_unit(0.5) == 0.0
    assert functions.log_jacobian(0.5) == pytest.approx(np.log(0.25))


def test_interval_summary_of_one_to_hundred():
    mean, lo, hi = functions.interval_summary(np.arange(1, 101))
    assert mean == 50.5
    assert lo == pytest.approx(3.475)
    assert hi == pytest.approx(97.525)


def test_interval_summary_rejects_empty():
    with pytest.raises(ValueError):
        functions.interval_summary([])
    with pytest.raises(ValueError):
        functions.interval_summary(np.ones((2, 2)))


def test_format_interval():
    assert functions.format_interval(0.3, 0.25, 0.38) == '0.30 (0.25, 0.38)'
    assert functions.format_interval(16.274, 10.0, 21.555, digits=1) == '16.3 (10.0, 21.6)'


def test_ess_constant_chain_is_degenerate():
    assert functions.effective_sample_size(np.full(100, 0.3)) == (0.0, True)


def test_ess_of_independent_draws_close_to_n():
    chain = np.random.default_rng(0).standard_normal(5000)
    ess = functions.effective_sample_size(chain)
    assert not ess.degenerate
    assert 0.7 * 5000 < ess.value < 1.3 * 5000


def test_ess_of_ar1_chain():
    rng = np.random.default_rng(1)
    n, phi = 20_000, 0.9
    chain = np.empty(n)
    chain[0] = rng.standard_normal()
    for t in range(1, n):
        chain[t] = phi * chain[t - 1] + np.sqrt(1 - phi ** 2) * rng.standard_normal()
    expected = n * (1 - phi) / (1 + phi)
    assert 0.6 * expected < functions.effective_sample_size(chain).value < 1.5 * expected


def test_ess_of_anticorrelated_chain_is_capped():
    n = 1000
    ess = functions.effective_sample_size(np.tile([1.0, -1.0], n // 2))
    assert ess.value == pytest.approx(n * np.log10(n))


def test_ess_of_short_chain_is_degenerate():
    assert functions.effective_sample_size([0.1, 0.4, 0.2]) == (0.0, True)
    assert not functions.effective_sample_size([0.1, 0.4, 0.2, 0.3]).degenerate


def test_definitions_drive_config_choices():
    assert McmcConfig().target_accept == definitions.TARGET_ACCEPT
    for transform in definitions.TRANSFORMS:
        assert RunConfig(transform=transform).transform == transform
    with pytest.raises(ValueError):
        RunConfig(transform='sqrt')
    with pytest.raises(ValueError):
        RunConfig(model='icar')
