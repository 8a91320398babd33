import numpy as np
import pytest
from scipy.io import mmread

from bdagar.dagar import (GmrfScale, SpatialPrecision, build_BF, car_precision,
                          dagar_precision, gmrf_log_density, sample_gmrf,
                          spatial_precision, write_matrix_market)
from bdagar.errors import GraphError
from bdagar.graph import from_edges, grid_graph, path_graph, star_graph

TEST_GRAPHS = [path_graph(1), path_graph(2), path_graph(10), grid_graph(3, 3),
               grid_graph(7, 7), star_graph(5)]


@pytest.mark.parametrize('graph', TEST_GRAPHS, ids=repr)
def test_rho_zero_gives_identity(graph):
    components = build_BF(graph, 0.0)
    assert components.B.count_nonzero() == 0
    assert np.all(components.F == 1.0)
    Q = dagar_precision(graph, 0.0).toarray()
    off = Q - np.diag(np.diag(Q))
    assert np.all(off == 0.0)
    assert np.allclose(np.diag(Q), 1.0, rtol=0, atol=1e-15)


def test_build_BF_hand_values():
    # vertex 2 has one earlier neighbor, vertex 3 (the hub placed last) has two
    graph = from_edges(['a', 'b', 'c'], [('a', 'b'), ('a', 'c'), ('b', 'c')])
    components = build_BF(graph, 0.5)
    B = components.B.toarray()
    assert components.F[0] == pytest.approx(1.0)
    assert B[1, 0] == pytest.approx(0.5)
    assert components.F[1] == pytest.approx(1.0 / 0.75)
    assert B[2, 0] == pytest.approx(0.4)
    assert B[2, 1] == pytest.approx(0.4)
    assert components.F[2] == pytest.approx(1.25 / 0.75)
    assert np.all(np.triu(B) == 0.0)


@pytest.mark.parametrize('rho', [-0.1, 1.0, 1.5, float('nan')])
def test_rho_outside_unit_interval_rejected(rho):
    with pytest.raises(ValueError, match='rho'):
        build_BF(path_graph(3), rho)
    with pytest.raises(ValueError, match='rho'):
        car_precision(path_graph(3), rho)


def test_two_path_precision_and_logdet():
    prec = dagar_precision(path_graph(2), 0.6)
    assert np.allclose(prec.toarray(), [[1.5625, -0.9375], [-0.9375, 1.5625]], atol=1e-12)
    assert prec.logdet == pytest.approx(0.44629, abs=1e-5)
    assert prec.logdet == pytest.approx(np.linalg.slogdet(prec.toarray())[1], abs=1e-12)


def test_path_is_unit_variance_ar1():
    rho = 0.7
    cov = np.linalg.inv(dagar_precision(path_graph(10), rho).toarray())
    assert np.allclose(np.diag(cov), 1.0, atol=1e-8)
    adjacent = np.diag(cov, 1) / np.sqrt(np.diag(cov)[:-1] * np.diag(cov)[1:])
    assert np.allclose(adjacent, rho, atol=1e-8)


@pytest.mark.parametrize('rho', np.round(np.arange(0.1, 1.0, 0.1), 1))
def test_closed_form_logdet_matches_dense(rho):
    prec = dagar_precision(grid_graph(5, 5), rho)
    sign, dense = np.linalg.slogdet(prec.toarray())
    assert sign > 0
    assert abs(prec.logdet - dense) <= 1e-8


@pytest.mark.parametrize('graph', TEST_GRAPHS[1:], ids=repr)
@pytest.mark.parametrize('rho', [0.05, 0.5, 0.95, 0.999])
def test_precision_symmetric_positive_definite(graph, rho):
    Q = dagar_precision(graph, rho).toarray()
    assert np.allclose(Q, Q.T, atol=1e-12)
    np.linalg.cholesky(Q)


def test_solve_and_half_solve_agree_with_dense():
    rng = np.random.default_rng(3)
    for kind in ('dagar', 'car'):
        prec = spatial_precision(grid_graph(3, 4), 0.8, kind)
        Q = prec.toarray()
        rhs = rng.standard_normal(12)
        assert np.allclose(prec.solve(rhs), np.linalg.solve(Q, rhs), atol=1e-10)
        assert np.allclose(prec.inverse(), np.linalg.inv(Q), atol=1e-10)
        x = rng.standard_normal(12)
        assert prec.quad_form(x) == pytest.approx(x @ Q @ x, rel=1e-12)
        # L^{-T} L^{-1} = Q^{-1}
        H = prec.half_solve(np.eye(12))
        assert np.allclose(H @ H.T, np.linalg.inv(Q), atol=1e-10)


def test_car_precision_examples():
    assert np.array_equal(car_precision(path_graph(4), 0.0).toarray(),
                          np.diag([1.0, 2.0, 2.0, 1.0]))
    assert np.allclose(car_precision(path_graph(2), 0.6).toarray(), [[1, -0.6], [-0.6, 1]])
    graph = grid_graph(2, 2)
    prec = car_precision(graph, 0.5)
    Q = prec.toarray()
    assert np.all(np.diag(Q) == 2.0)
    assert np.sum(np.isclose(Q, -0.5)) == 2 * len(graph.edges)
    assert np.all(np.linalg.eigvalsh(Q) > 0)
    assert prec.logdet == pytest.approx(np.linalg.slogdet(Q)[1], abs=1e-12)


def test_car_diagonal_dominance_margin():
    graph = grid_graph(4, 4)
    rho = 0.9
    Q = car_precision(graph, rho).toarray()
    margin = np.diag(Q) - (np.abs(Q).sum(axis=1) - np.abs(np.diag(Q)))
    assert np.allclose(margin, (1 - rho) * graph.degrees)


def test_car_rejects_isolated_region():
    graph = from_edges(['a', 'b', 'lonely'], [('a', 'b')])
    with pytest.raises(GraphError, match='lonely'):
        car_precision(graph, 0.5)
    # DAGAR has no such restriction
    dagar_precision(graph, 0.5)


def test_unknown_kind_rejected():
    with pytest.raises(ValueError, match='kind'):
        spatial_precision(path_graph(3), 0.5, 'icar')
    with pytest.raises(ValueError, match='kind'):
        SpatialPrecision(np.eye(2), 0.0, 'icar')


def test_gmrf_log_density_scalar_examples():
    unit = dagar_precision(path_graph(1), 0.0)
    assert gmrf_log_density([0.0], GmrfScale(1.0), unit) == pytest.approx(-0.91894, abs=1e-5)
    assert gmrf_log_density([1.0], GmrfScale(4.0), unit) == pytest.approx(-2.22580, abs=1e-5)


def test_gmrf_log_density_at_mean_ignores_w():
    prec = dagar_precision(grid_graph(2, 3), 0.4)
    scale = GmrfScale(3.0)
    expected = -3 * np.log(2 * np.pi) + 3 * np.log(3.0) + 0.5 * prec.logdet
    for w in (np.zeros(6), np.arange(6.0)):
        assert gmrf_log_density(w, scale, prec, mean=w) == pytest.approx(expected, rel=1e-12)


def test_gmrf_log_density_matches_scipy():
    from scipy import stats
    prec = car_precision(grid_graph(2, 3), 0.7)
    w = np.linspace(-1, 1, 6)
    scale = GmrfScale(2.5)
    cov = np.linalg.inv(scale.tau * prec.toarray())
    assert gmrf_log_density(w, scale, prec) == pytest.approx(
        stats.multivariate_normal(np.zeros(6), cov).logpdf(w), rel=1e-10)


def test_gmrf_log_density_dimension_mismatch():
    with pytest.raises(ValueError, match='dimension'):
        gmrf_log_density(np.zeros(3), GmrfScale(1.0), dagar_precision(path_graph(4), 0.5))


def test_gmrf_scale_must_be_positive():
    for tau in (0.0, -1.0, float('inf')):
        with pytest.raises(ValueError, match='tau'):
            GmrfScale(tau)


def test_sample_identity_precision_mean():
    prec = dagar_precision(path_graph(3), 0.0)
    draws = sample_gmrf(GmrfScale(1.0), prec, rng=1, size=100_000)
    assert draws.shape == (100_000, 3)
    assert np.all(np.abs(draws.mean(axis=0)) < 4 / np.sqrt(100_000))


def test_sample_two_path_correlation():
    draws = sample_gmrf(GmrfScale(1.0), dagar_precision(path_graph(2), 0.6), rng=7,
                        size=200_000)
    assert np.corrcoef(draws.T)[0, 1] == pytest.approx(0.6, abs=0.01)


@pytest.mark.parametrize('kind', ['dagar', 'car'])
def test_sample_covariance_within_monte_carlo_error(kind):
    n = 200_000
    scale = GmrfScale(2.0)
    prec = spatial_precision(star_graph(3), 0.7, kind)
    draws = sample_gmrf(scale, prec, mean=np.array([1.0, 0.0, -1.0, 2.0]), rng=11, size=n)
    target = np.linalg.inv(scale.tau * prec.toarray())
    empirical = np.cov(draws.T)
    var = np.diag(target)
    se = np.sqrt((np.outer(var, var) + target ** 2) / n)
    assert np.all(np.abs(empirical - target) < 4 * se)
    assert np.allclose(draws.mean(axis=0), [1.0, 0.0, -1.0, 2.0], atol=4 * np.sqrt(var.max() / n))


def test_sample_is_deterministic_given_seed():
    prec = dagar_precision(grid_graph(3, 3), 0.5)
    first = sample_gmrf(GmrfScale(1.0), prec, rng=np.random.default_rng(5))
    second = sample_gmrf(GmrfScale(1.0), prec, rng=np.random.default_rng(5))
    assert first.shape == (9,)
    assert np.array_equal(first, second)


def test_write_matrix_market(tmp_path):
    prec = dagar_precision(grid_graph(3, 3), 0.5)
    path = tmp_path / 'q.mtx'
    write_matrix_market(prec, path)
    assert np.allclose(mmread(str(path)).toarray(), prec.toarray(), atol=1e-14)
    assert 'dagar precision' in path.read_text()
