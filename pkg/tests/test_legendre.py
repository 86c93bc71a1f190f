import numpy as np
import pytest

from recipkit.core import (
    BoxDomain,
    ConvergenceError,
    ScalarField,
    SingularMatrixError,
    quadratic_field,
)
from recipkit.legendre import (
    euler_degree_check,
    homogeneity_check,
    legendre_transform,
    make_legendre_pair,
    tilde_function,
)


def quartic_1d(halfwidth=1.5):
    box = BoxDomain.cube(1, halfwidth=halfwidth)
    return ScalarField(
        1,
        lambda x: 0.25 * float(x[0] ** 4),
        box,
        gradient=lambda x: np.array([x[0] ** 3]),
        hessian=lambda x: np.array([[3.0 * x[0] ** 2]]),
    )


def test_legendre_transform_scalar_quadratic():
    K = quadratic_field(np.array([[1.0]]), BoxDomain.cube(1, halfwidth=2.0))
    x, ks = legendre_transform(K, [0.7])
    assert x[0] == pytest.approx(0.7, abs=1e-12)
    assert ks == pytest.approx(0.5 * 0.7 ** 2, abs=1e-12)


def test_legendre_transform_quadratic_closed_form():
    Q = np.array([[2.0, 0.5], [0.5, 1.0]])
    K = quadratic_field(Q, BoxDomain.cube(2, halfwidth=3.0))
    Qinv = np.linalg.inv(Q)
    rng = np.random.default_rng(2)
    for _ in range(10):
        z = rng.uniform(-1.5, 1.5, size=2)
        x, ks = legendre_transform(K, z)
        np.testing.assert_allclose(x, Qinv @ z, atol=1e-10)
        assert ks == pytest.approx(0.5 * z @ Qinv @ z, abs=1e-10)


def test_legendre_transform_unreachable_covector():
    K = quadratic_field(np.array([[1.0]]), BoxDomain.cube(1))
    # grad K on the inflated box never reaches 5
    with pytest.raises(ConvergenceError):
        legendre_transform(K, [5.0])


def test_legendre_transform_singular_hessian_at_start():
    K = quartic_1d()
    # domain center 0 has vanishing Hessian
    with pytest.raises(SingularMatrixError):
        legendre_transform(K, [0.5])


def test_make_legendre_pair_quadratic():
    Q = np.array([[2.0, 0.5], [0.5, 1.0]])
    K = quadratic_field(Q, BoxDomain.cube(2, halfwidth=2.0))
    pair = make_legendre_pair(K, samples=80, seed=0)
    Qinv = np.linalg.inv(Q)
    rng = np.random.default_rng(1)
    for _ in range(10):
        x = rng.uniform(-1.0, 1.0, size=2)
        z = pair.forward(x)
        np.testing.assert_allclose(z, Q @ x, atol=1e-12)
        np.testing.assert_allclose(pair.inverse(z), x, atol=1e-9)
        assert pair.Kstar(z) == pytest.approx(0.5 * z @ Qinv @ z, abs=1e-10)
        np.testing.assert_allclose(pair.Kstar.hess(z), Qinv, atol=1e-9)


def test_quartic_conjugate_scaling():
    # K = x^4/4 gives K*(grad K(x)) = 3 K(x) and K*(z) = (3/4) |z|^(4/3)
    K = quartic_1d()
    for xv in (0.4, 0.9, 1.3, -0.7, -1.2):
        z = np.array([xv ** 3])
        _, ks = legendre_transform(K, z, x_init=[xv])
        assert ks == pytest.approx(3.0 * K([xv]), abs=1e-12)
        assert ks == pytest.approx(0.75 * abs(z[0]) ** (4.0 / 3.0), abs=1e-12)


def test_homogeneity_quadratic():
    K = quadratic_field(np.array([[2.0, 0.5], [0.5, 1.0]]), BoxDomain.cube(2))
    rep = homogeneity_check(K, tol=1e-9)
    assert rep.equal and rep.degree2
    assert rep.max_conjugacy_gap < 1e-11
    assert rep.max_scaling_gap < 1e-11


def test_homogeneity_shifted_quadratic_splits_booleans():
    # adding a constant keeps quadratic scaling (the offset is subtracted)
    # but breaks K*(grad K(x)) = K(x) by twice the offset
    K = quadratic_field(np.eye(2), BoxDomain.cube(2), const=1.0)
    rep = homogeneity_check(K, tol=1e-9)
    assert rep.degree2
    assert not rep.equal
    assert rep.max_conjugacy_gap > 0.1


def test_homogeneity_non_homogeneous_field():
    box = BoxDomain.cube(2)
    K = ScalarField(
        2,
        lambda x: float(np.sum(np.cosh(x))) - 2.0,
        box,
        gradient=lambda x: np.sinh(x),
        hessian=lambda x: np.diag(np.cosh(x)),
    )
    rep = homogeneity_check(K, tol=1e-9)
    assert not rep.equal
    assert not rep.degree2


def test_euler_degree_check():
    box = BoxDomain.cube(2)
    quartic = ScalarField(
        2,
        lambda x: 0.25 * float(np.sum(x ** 4)),
        box,
        gradient=lambda x: x ** 3,
        hessian=lambda x: np.diag(3.0 * x ** 2),
    )
    assert euler_degree_check(quartic, 4.0)
    assert not euler_degree_check(quartic, 2.0)
    assert euler_degree_check(quadratic_field(np.eye(2), box), 2.0)


def test_tilde_function_quadratic_oracle():
    Q = np.array([[2.0, 0.5], [0.5, 1.0]])
    S = quadratic_field(Q, BoxDomain.cube(2, halfwidth=2.0))
    pair = make_legendre_pair(S, samples=80, seed=0)
    tilde = tilde_function(S, pair)
    Qinv = np.linalg.inv(Q)
    rng = np.random.default_rng(4)
    for _ in range(8):
        z = rng.uniform(-1.0, 1.0, size=2)
        # S(Q^-1 z) = (1/2) z^T Q^-1 z for S = (1/2) x^T Q x
        assert tilde(z) == pytest.approx(0.5 * z @ Qinv @ z, abs=1e-10)
        np.testing.assert_allclose(tilde.grad(z), Qinv @ z, atol=1e-9)
    assert tilde(np.zeros(2)) == pytest.approx(0.0, abs=1e-12)


def test_make_legendre_pair_rejects_degenerate_field():
    box = BoxDomain.cube(1, halfwidth=4.0)
    K = ScalarField(1, lambda x: float(np.sin(x[0])), box,
                    gradient=lambda x: np.cos(x),
                    hessian=lambda x: np.array([[-np.sin(x[0])]]))
    with pytest.raises((ConvergenceError, SingularMatrixError)):
        make_legendre_pair(K, samples=40, seed=0)


def test_pair_battery_fields_verify():
    from recipkit.models import field_registry

    fields = field_registry()
    assert len(fields) >= 6
    for name, K in fields.items():
        pair = make_legendre_pair(K, samples=50, seed=0)
        x = K.domain.shrink(0.5).sample(1, seed=7)[0]
        np.testing.assert_allclose(pair.inverse(pair.forward(x)), x, atol=1e-8,
                                   err_msg=name)
