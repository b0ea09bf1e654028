"""Metric fields, Christoffel symbols, connection and Laplacian oracles."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import phmorph.jets as jets
from phmorph import (
    ChartedRiemannianManifold,
    FDMetric,
    JetMetric,
    MetricError,
    TangentVector,
    euclidean_space,
    parse,
)
from phmorph.manifold import directional_derivative, richardson_partial


def sphere_metric_components(coords):
    # round unit 2-sphere in polar chart (theta, phi_angle)
    theta = coords[0]
    s = jets.sin(theta)
    one = coords[0] * 0.0 + 1.0
    zero = coords[0] * 0.0
    return [[one, zero], [zero, s * s]]


def conformal2_components(coords):
    # g = e^{2 x1} * identity on R^2
    f = jets.exp(2.0 * coords[0])
    zero = coords[0] * 0.0
    return [[f, zero], [zero, f]]


def sphere_manifold(strategy="ad"):
    if strategy == "ad":
        metric = JetMetric(2, sphere_metric_components)
    else:
        def mat(p):
            return np.array([[1.0, 0.0], [0.0, math.sin(p[0]) ** 2]])

        metric = FDMetric(2, mat)
    return ChartedRiemannianManifold(2, metric, name="sphere-polar")


@pytest.mark.parametrize("strategy", ["ad", "fd"])
def test_sphere_christoffel(strategy):
    # Closed form: Gamma^theta_{phiphi} = -sin t cos t, Gamma^phi_{theta phi} = cot t.
    man = sphere_manifold(strategy)
    t = 1.0
    gam = man.christoffel(np.array([t, 0.4]))
    tol = 1e-12 if strategy == "ad" else 1e-8
    assert gam[0, 1, 1] == pytest.approx(-math.sin(t) * math.cos(t), abs=tol)
    assert gam[1, 0, 1] == pytest.approx(math.cos(t) / math.sin(t), abs=tol)
    assert gam[1, 1, 0] == pytest.approx(math.cos(t) / math.sin(t), abs=tol)
    assert gam[0, 0, 0] == pytest.approx(0.0, abs=tol)


@pytest.mark.parametrize("strategy", ["ad", "fd"])
def test_conformal_christoffel(strategy):
    # For g = e^{2 lambda} delta with lambda = x1:
    # Gamma^k_ij = d_ik dlambda_j + d_jk dlambda_i - d_ij dlambda_k.
    if strategy == "ad":
        metric = JetMetric(2, conformal2_components)
    else:
        metric = FDMetric(2, lambda p: math.exp(2 * p[0]) * np.eye(2))
    man = ChartedRiemannianManifold(2, metric)
    gam = man.christoffel(np.array([0.3, -0.2]))
    tol = 1e-12 if strategy == "ad" else 1e-8
    assert gam[0, 0, 0] == pytest.approx(1.0, abs=tol)
    assert gam[0, 1, 1] == pytest.approx(-1.0, abs=tol)
    assert gam[1, 0, 1] == pytest.approx(1.0, abs=tol)
    assert gam[1, 1, 1] == pytest.approx(0.0, abs=tol)
    assert gam[0, 0, 1] == pytest.approx(0.0, abs=tol)


def test_ad_and_fd_metrics_agree():
    ad = ChartedRiemannianManifold(2, JetMetric(2, sphere_metric_components))
    fd = sphere_manifold("fd")
    for p in ([1.1, 0.2], [0.7, -0.5], [2.0, 1.0]):
        p = np.array(p)
        assert np.allclose(ad.metric_at(p), fd.metric_at(p), rtol=1e-12)
        assert np.allclose(ad.christoffel(p), fd.christoffel(p), atol=1e-7)


def test_christoffel_symmetry_in_lower_indices():
    man = sphere_manifold("ad")
    gam = man.christoffel(np.array([0.9, 0.1]))
    assert np.allclose(gam, gam.transpose(0, 2, 1), atol=1e-14)


@settings(max_examples=25, deadline=None)
@given(
    st.floats(min_value=0.4, max_value=2.5),
    st.floats(min_value=-1.5, max_value=1.5),
)
def test_metric_compatibility(theta, phi_angle):
    # nabla g = 0: dg[k,i,j] = Gamma^l_ki g_lj + Gamma^l_kj g_il.
    man = sphere_manifold("ad")
    p = np.array([theta, phi_angle])
    g, dg = man.metric.matrix_and_derivs(p)
    gam = man.christoffel(p)
    recon = np.einsum("lki,lj->kij", gam, g) + np.einsum("lkj,il->kij", gam, g)
    assert np.allclose(dg, recon, atol=1e-12)


def test_covariant_derivative_against_koszul_fd():
    # Independent check of nabla_X Y through raw finite differences of g.
    man = ChartedRiemannianManifold(2, JetMetric(2, conformal2_components))
    p = np.array([0.25, -0.4])
    c_y = np.array([0.7, -0.3])
    c_x = np.array([0.2, 1.1])

    def y_field(q):
        # a genuinely position-dependent field
        return np.array([c_y[0] * q[1], c_y[1] + q[0] ** 2])

    nab = man.covariant_derivative(y_field, TangentVector(p, c_x))
    dy = np.array([directional_derivative(y_field, p, e, step=1e-5)
                   for e in np.eye(2)])
    gam = man.christoffel(p)
    expected = c_x @ dy + np.einsum("kij,i,j->k", gam, c_x, y_field(p))
    assert np.allclose(nab.components, expected, atol=1e-6)


def test_gradient_conformal():
    man = ChartedRiemannianManifold(2, JetMetric(2, conformal2_components))
    p = np.array([0.5, 0.2])
    grad = man.gradient(parse("x1+3*x2"), p)
    assert np.allclose(grad.components, math.exp(-1.0) * np.array([1.0, 3.0]),
                       rtol=1e-12)


def test_laplacian_euclidean():
    man = euclidean_space(3)
    p = np.array([0.3, -0.1, 0.7])
    assert man.laplace_beltrami(parse("x1^2+x2^2+x3^2"), p) == pytest.approx(6.0, abs=1e-10)
    assert man.laplace_beltrami(parse("x1*x2"), p) == pytest.approx(0.0, abs=1e-10)


def test_laplacian_sphere_eigenfunction():
    # cos(theta) is an eigenfunction of the sphere Laplacian: Delta f = -2 f.
    man = sphere_manifold("ad")
    for t in (0.6, 1.0, 2.1):
        p = np.array([t, 0.3])
        val = man.laplace_beltrami(parse("cos(x1)"), p)
        assert val == pytest.approx(-2.0 * math.cos(t), abs=1e-9)


def test_degenerate_metric_rejected():
    man = ChartedRiemannianManifold(
        2, FDMetric(2, lambda p: np.array([[1.0, 1.0], [1.0, 1.0]])))
    with pytest.raises(MetricError):
        man.metric_at(np.zeros(2))


def test_asymmetric_metric_rejected():
    man = ChartedRiemannianManifold(
        2, FDMetric(2, lambda p: np.array([[1.0, 0.3], [0.0, 1.0]])))
    with pytest.raises(MetricError):
        man.metric_at(np.zeros(2))


def test_richardson_partial_beats_plain_central_difference():
    f = lambda p: math.exp(3.0 * p[0])
    p = np.array([0.5])
    exact = 3.0 * math.exp(1.5)
    rich = richardson_partial(f, p, 0, 1e-3)
    plain = (f(p + 1e-3) - f(p - 1e-3)) / 2e-3
    assert abs(rich - exact) < abs(plain - exact) * 1e-3


def test_field_jet_matches_callable_and_expr():
    man = euclidean_space(2)
    p = np.array([0.4, -0.6])
    j1 = man.field_jet(parse("x1^2*x2"), p)
    j2 = man.field_jet(lambda c: c[0] ** 2 * c[1], p)
    assert j1.value == pytest.approx(j2.value, rel=1e-14)
    assert np.allclose(j1.grad, j2.grad, rtol=1e-14)
    assert np.allclose(j1.hess, j2.hess, rtol=1e-14)
