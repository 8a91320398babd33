import numpy as np
import pandas as pd
import pytest

from bdagar.dagar import spatial_precision
from bdagar.graph import grid_graph, path_graph
from bdagar.model import (BdagarSpec, JointGaussian, LinkingParams, cross_correlation_map,
                          joint_covariance, joint_precision, linking_matrix,
                          posterior_cross_correlation)


def random_spec(graph, rng, kind='dagar'):
    return BdagarSpec(
        graph=graph, kind=kind,
        rho1=rng.uniform(0, 0.99), rho2=rng.uniform(0, 0.99),
        tau1=rng.uniform(0.2, 5), tau2=rng.uniform(0.2, 5),
        link=LinkingParams(rng.normal(0, 2), rng.normal(0, 1)))


def test_linking_matrix_examples():
    graph = path_graph(2)
    assert np.array_equal(linking_matrix(LinkingParams(3.0, 0.0), graph).toarray(), 3 * np.eye(2))
    assert np.array_equal(linking_matrix(LinkingParams(1.0, 2.0), graph).toarray(),
                          [[1, 2], [2, 1]])
    single = linking_matrix(LinkingParams(16.27, 0.87), path_graph(1)).toarray()
    assert single.shape == (1, 1)
    assert single[0, 0] == pytest.approx(16.27)


def test_linking_params_must_be_finite():
    with pytest.raises(ValueError, match='eta1'):
        LinkingParams(0.0, float('nan'))


def test_spec_validates_domains():
    graph = path_graph(3)
    with pytest.raises(ValueError, match='rho'):
        BdagarSpec(graph, rho1=1.0)
    with pytest.raises(ValueError, match='tau'):
        BdagarSpec(graph, tau2=0.0)
    with pytest.raises(ValueError, match='kind'):
        BdagarSpec(graph, kind='icar')
    assert BdagarSpec(graph, link=(1.0, 2.0)).link == LinkingParams(1.0, 2.0)


def test_scalar_witness():
    # k = 1: Q1 = Q2 = 1 at rho = 0, unit tau, eta0 = 1
    spec = BdagarSpec(path_graph(1), rho1=0.0, rho2=0.0, link=LinkingParams(1.0, 0.0))
    joint = joint_precision(spec)
    assert np.array_equal(joint.Qw.toarray(), [[2.0, -1.0], [-1.0, 1.0]])
    assert np.array_equal(joint.covariance(), [[1.0, 1.0], [1.0, 2.0]])
    assert np.array_equal(joint.Qw.toarray() @ joint.covariance(), np.eye(2))


def test_independent_diseases_give_block_diagonal():
    graph = grid_graph(2, 3)
    spec = BdagarSpec(graph, rho1=0.3, rho2=0.8, tau1=2.0, tau2=0.5)
    Qw = joint_precision(spec).Qw.toarray()
    Q1 = spatial_precision(graph, 0.3).toarray()
    Q2 = spatial_precision(graph, 0.8).toarray()
    assert np.allclose(Qw[:6, :6], 2.0 * Q1)
    assert np.allclose(Qw[6:, 6:], 0.5 * Q2)
    assert np.all(Qw[:6, 6:] == 0.0)
    C11, C12, C21, C22 = joint_covariance(spec)
    assert np.all(C12 == 0.0) and np.all(C21 == 0.0)
    assert np.allclose(C22, np.linalg.inv(Q2) / 0.5)


@pytest.mark.parametrize('kind', ['dagar', 'car'])
def test_precision_times_covariance_is_identity(kind):
    rng = np.random.default_rng(42)
    graph = grid_graph(3, 3)
    for _ in range(20):
        joint = joint_precision(random_spec(graph, rng, kind))
        product = joint.Qw.toarray() @ joint.covariance()
        assert np.allclose(product, np.eye(18), rtol=0, atol=1e-8)


@pytest.mark.parametrize('kind', ['dagar', 'car'])
def test_joint_logdet_matches_dense(kind):
    rng = np.random.default_rng(8)
    for _ in range(5):
        joint = JointGaussian(random_spec(grid_graph(3, 4), rng, kind))
        sign, dense = np.linalg.slogdet(joint.Qw.toarray())
        assert sign > 0
        assert joint.logdet == pytest.approx(dense, abs=1e-8)


def test_top_left_block_ignores_second_disease():
    graph = grid_graph(3, 3)
    base = BdagarSpec(graph, rho1=0.4, tau1=1.5)
    other = BdagarSpec(graph, rho1=0.4, tau1=1.5, rho2=0.9, tau2=7.0,
                       link=LinkingParams(-3.0, 0.5))
    assert np.allclose(joint_covariance(base)[0], joint_covariance(other)[0], atol=1e-14)


def test_log_density_matches_scipy():
    from scipy import stats
    rng = np.random.default_rng(1)
    joint = JointGaussian(random_spec(grid_graph(2, 2), rng))
    w = rng.standard_normal(8)
    expected = stats.multivariate_normal(np.zeros(8), joint.covariance()).logpdf(w)
    assert joint.log_density(w) == pytest.approx(expected, rel=1e-9)
    with pytest.raises(ValueError, match='length 8'):
        joint.log_density(np.zeros(4))


def test_joint_sample_covariance():
    n = 200_000
    spec = BdagarSpec(path_graph(4), rho1=0.6, rho2=0.3, tau1=1.0, tau2=2.0,
                      link=LinkingParams(0.8, 0.3))
    joint = JointGaussian(spec)
    draws = joint.sample(np.random.default_rng(9), size=n)
    assert draws.shape == (n, 8)
    target = joint.covariance()
    var = np.diag(target)
    se = np.sqrt((np.outer(var, var) + target ** 2) / n)
    assert np.all(np.abs(np.cov(draws.T) - target) < 4 * se)


def test_joint_single_sample_is_deterministic():
    spec = BdagarSpec(grid_graph(2, 2), link=LinkingParams(1.0, 0.0))
    first = JointGaussian(spec).sample(np.random.default_rng(3))
    second = JointGaussian(spec).sample(np.random.default_rng(3))
    assert first.shape == (8,)
    assert np.array_equal(first, second)


def test_cross_correlation_examples():
    graph = grid_graph(3, 3)
    assert np.all(cross_correlation_map(BdagarSpec(graph)) == 0.0)
    unit = BdagarSpec(path_graph(1), rho1=0.0, rho2=0.0, link=LinkingParams(1.0, 0.0))
    assert cross_correlation_map(unit)[0] == pytest.approx(1 / np.sqrt(2), abs=1e-12)
    strong = BdagarSpec(path_graph(1), rho1=0.0, rho2=0.0, tau1=2.0, tau2=20.0,
                        link=LinkingParams(16.0, 0.0))
    # 16 / sqrt(256 + 2 / 20)
    assert cross_correlation_map(strong)[0] == pytest.approx(0.9998047, abs=1e-6)


def test_cross_correlation_bounded():
    rng = np.random.default_rng(5)
    for kind in ('dagar', 'car'):
        for _ in range(10):
            corr = cross_correlation_map(random_spec(grid_graph(3, 3), rng, kind))
            assert np.all(np.abs(corr) <= 1.0)


class _Draws:
    def __init__(self, graph, frame):
        self.graph = graph
        self.kind = 'dagar'
        self.frame = frame


def test_posterior_cross_correlation_averages_per_draw_maps():
    graph = path_graph(1)
    frame = pd.DataFrame({'rho_1': [0.0, 0.0], 'rho_2': [0.0, 0.0], 'tau_1': [1.0, 1.0],
                          'tau_2': [1.0, 1.0], 'eta_0': [1.0, 0.0], 'eta_1': [0.0, 0.0]})
    values = posterior_cross_correlation(_Draws(graph, frame))
    assert list(values.columns) == ['region', 'mean', 'lo', 'hi']
    assert values['region'].tolist() == ['v0']
    assert values['mean'][0] == pytest.approx(0.5 / np.sqrt(2))
    assert values['lo'][0] == pytest.approx(0.025 / np.sqrt(2))
    assert values['hi'][0] == pytest.approx(0.975 / np.sqrt(2))
