import numpy as np
import pytest

from recipkit.core import (
    AffineNonlinearSystem,
    AssumptionError,
    BoxDomain,
    ConvergenceError,
    DimensionMismatchError,
    DomainError,
    MetricField,
    NonlinearSystem,
    Polynomial,
    ScalarField,
    SignatureMatrix,
    SingularMatrixError,
    as_matrix,
    as_vector,
    finite_difference_gradient,
    finite_difference_jacobian,
    hessian_from_value,
    integrate_segment,
    quadratic_field,
    symmetry_residual,
    validate_metric_field,
    validate_scalar_field,
)


def test_as_vector_shapes():
    v = as_vector([1.0, 2.0])
    assert v.shape == (2,)
    assert v.dtype == float
    assert as_vector(3.0, 1).shape == (1,)
    with pytest.raises(DimensionMismatchError):
        as_vector([1.0, 2.0], 3)
    with pytest.raises(DimensionMismatchError):
        as_vector(np.eye(2))


def test_as_matrix_shape_is_exact():
    M = as_matrix([[1.0, 2.0], [3.0, 4.0]])
    assert M.shape == (2, 2)
    # 1-D input promotes to a row
    assert as_matrix([1.0, 2.0]).shape == (1, 2)
    with pytest.raises(DimensionMismatchError):
        as_matrix(M, (2, 3))


def test_symmetry_residual():
    assert symmetry_residual(np.eye(3)) == 0.0
    M = np.array([[0.0, 1.0], [-1.0, 0.0]])
    assert symmetry_residual(M) == pytest.approx(2.0)


def test_box_domain_basics():
    box = BoxDomain(np.array([-1.0, 0.0]), np.array([1.0, 2.0]))
    assert box.dim == 2
    np.testing.assert_allclose(box.center, [0.0, 1.0])
    np.testing.assert_allclose(box.width, [2.0, 2.0])
    assert box.contains([0.5, 1.5])
    assert not box.contains([1.5, 1.0])
    # margin pads the box outward in relative units
    assert box.contains([1.05, 1.0], margin=0.05)
    assert not box.contains([1.05, 1.0], margin=0.01)
    with pytest.raises(DomainError):
        BoxDomain(np.array([1.0]), np.array([0.0]))


def test_box_domain_sample_inside_and_deterministic():
    box = BoxDomain.cube(3, halfwidth=2.0, center=0.5)
    pts = box.sample(40, seed=3)
    assert pts.shape == (40, 3)
    for p in pts:
        assert box.contains(p)
    np.testing.assert_array_equal(pts, box.sample(40, seed=3))


def test_box_domain_grid_product_shrink():
    a = BoxDomain.cube(1, halfwidth=1.0)
    b = BoxDomain.cube(2, halfwidth=2.0)
    prod = BoxDomain.product(a, b)
    assert prod.dim == 3
    g = prod.grid(3)
    assert g.shape == (27, 3)
    s = prod.shrink(0.5)
    np.testing.assert_allclose(s.width, 0.5 * prod.width)
    np.testing.assert_allclose(s.center, prod.center)


def test_finite_difference_gradient_and_jacobian():
    rng = np.random.default_rng(0)
    A = rng.normal(size=(3, 3))
    for _ in range(5):
        x = rng.normal(size=3)
        g = finite_difference_gradient(lambda v: float(np.sin(v[0]) + v[1] * v[2]), x)
        np.testing.assert_allclose(g, [np.cos(x[0]), x[2], x[1]], atol=1e-7)
        J = finite_difference_jacobian(lambda v: A @ v, x)
        np.testing.assert_allclose(J, A, atol=1e-8)


def test_hessian_from_value_quadratic():
    Q = np.array([[2.0, 0.5], [0.5, 1.0]])
    H = hessian_from_value(lambda v: 0.5 * v @ Q @ v, np.array([0.3, -0.2]))
    np.testing.assert_allclose(H, Q, atol=1e-6)


def test_scalar_field_fd_fallbacks_match_analytic():
    box = BoxDomain.cube(2, halfwidth=1.0)
    value = lambda x: float(np.cosh(x[0]) + x[0] * x[1] ** 2)
    analytic = ScalarField(
        2, value, box,
        gradient=lambda x: np.array([np.sinh(x[0]) + x[1] ** 2, 2 * x[0] * x[1]]),
        hessian=lambda x: np.array([[np.cosh(x[0]), 2 * x[1]], [2 * x[1], 2 * x[0]]]),
    )
    fd = ScalarField(2, value, box)
    for x in box.sample(10, seed=1):
        np.testing.assert_allclose(fd.grad(x), analytic.grad(x), atol=1e-6)
        np.testing.assert_allclose(fd.hess(x), analytic.hess(x), atol=1e-4)
    shifted = analytic.shifted(3.0)
    assert shifted([0.2, 0.1]) == pytest.approx(analytic([0.2, 0.1]) + 3.0)
    np.testing.assert_allclose(shifted.grad([0.2, 0.1]), analytic.grad([0.2, 0.1]))


def test_scalar_field_dim_mismatch():
    with pytest.raises(DimensionMismatchError):
        ScalarField(3, lambda x: 0.0, BoxDomain.cube(2))


def test_metric_field_checked():
    box = BoxDomain.cube(2)
    ok = MetricField.constant(np.diag([2.0, -1.0]), box)
    np.testing.assert_allclose(ok.checked([0.0, 0.0]), np.diag([2.0, -1.0]))

    bad_sym = MetricField(2, lambda x: np.array([[1.0, 0.5], [0.0, 1.0]]), box)
    with pytest.raises(AssumptionError):
        bad_sym.checked([0.0, 0.0])

    # metric degenerates at x1 = 1
    sing = MetricField(2, lambda x: np.diag([x[0] - 1.0, 1.0]), box)
    with pytest.raises(SingularMatrixError):
        sing.checked([1.0, 0.0])


def test_metric_field_from_hessian():
    box = BoxDomain.cube(2)
    K = quadratic_field(np.array([[3.0, 1.0], [1.0, 2.0]]), box)
    G = MetricField.from_hessian(K)
    np.testing.assert_allclose(G([0.4, -0.7]), [[3.0, 1.0], [1.0, 2.0]])


def test_signature_matrix():
    sig = SignatureMatrix(np.array([1, -1]))
    assert sig.m == 2
    assert not sig.is_identity
    np.testing.assert_allclose(sig.matrix, np.diag([1.0, -1.0]))
    np.testing.assert_allclose(sig.apply([2.0, 3.0]), [2.0, -3.0])
    M = np.array([[1.0, 2.0], [3.0, 4.0]])
    np.testing.assert_allclose(sig.conjugate_rows(M), np.diag([1.0, -1.0]) @ M)
    assert SignatureMatrix.identity(3).is_identity
    np.testing.assert_allclose(SignatureMatrix.minus_identity(2).matrix, -np.eye(2))
    with pytest.raises(DimensionMismatchError):
        SignatureMatrix(np.array([1.0, 0.5]))


def test_nonlinear_system_fd_jacobians():
    box = BoxDomain.cube(2)
    sys = NonlinearSystem(
        2, 1,
        F=lambda x, u: np.array([-x[0] ** 3 + u[0], x[0] - x[1]]),
        H=lambda x, u: np.array([x[0] * x[1] + 2.0 * u[0]]),
        domain=box,
    )
    x = np.array([0.3, -0.4])
    u = np.array([0.2])
    np.testing.assert_allclose(sys.jac_F_x(x, u), [[-3 * x[0] ** 2, 0.0], [1.0, -1.0]], atol=1e-7)
    np.testing.assert_allclose(sys.jac_F_u(x, u), [[1.0], [0.0]], atol=1e-8)
    np.testing.assert_allclose(sys.jac_H_x(x, u), [[x[1], x[0]]], atol=1e-7)
    np.testing.assert_allclose(sys.jac_H_u(x, u), [[2.0]], atol=1e-8)


def test_affine_system_to_general_consistent():
    box = BoxDomain.cube(2)
    aff = AffineNonlinearSystem(
        2, 2,
        f=lambda x: np.array([-x[0], -2.0 * x[1]]),
        g=lambda x: np.array([[1.0, x[1]], [0.0, 1.0]]),
        h=lambda x: np.array([x[0], x[0] + x[1]]),
        k=lambda x: 0.1 * np.eye(2),
        domain=box,
    )
    gen = aff.to_general()
    rng = np.random.default_rng(5)
    for _ in range(6):
        x = rng.uniform(-1, 1, size=2)
        u = rng.uniform(-1, 1, size=2)
        np.testing.assert_allclose(gen.F(x, u), aff.f(x) + aff.g(x) @ u)
        np.testing.assert_allclose(gen.H(x, u), aff.h(x) + aff.k(x) @ u)
        np.testing.assert_allclose(gen.jac_F_u(x, u), aff.g(x), atol=1e-9)
        # dF/dx picks up the state dependence of g through u
        fd = finite_difference_jacobian(lambda xx: aff.f(xx) + aff.g(xx) @ u, x)
        np.testing.assert_allclose(gen.jac_F_x(x, u), fd, atol=1e-6)
    assert aff.jac_g(np.array([0.1, 0.2])).shape == (2, 2, 2)


def test_polynomial_derivatives():
    # p = x^2 y + 3 y^3
    p = Polynomial(2, (((2, 1), 1.0), ((0, 3), 3.0)))
    x = np.array([1.5, -0.5])
    assert p.value(x) == pytest.approx(x[0] ** 2 * x[1] + 3 * x[1] ** 3)
    np.testing.assert_allclose(p.grad(x), [2 * x[0] * x[1], x[0] ** 2 + 9 * x[1] ** 2])
    np.testing.assert_allclose(p.hess(x), [[2 * x[1], 2 * x[0]], [2 * x[0], 18 * x[1]]])
    field = p.to_field(BoxDomain.cube(2))
    assert field(x) == pytest.approx(p.value(x))
    with pytest.raises(DimensionMismatchError):
        Polynomial(2, (((1,), 1.0),))


def test_quadratic_field():
    Q = np.array([[2.0, 1.0], [1.0, 4.0]])
    b = np.array([0.5, -1.0])
    f = quadratic_field(Q, BoxDomain.cube(2), lin=b, const=2.0)
    x = np.array([0.3, 0.7])
    assert f(x) == pytest.approx(0.5 * x @ Q @ x + b @ x + 2.0)
    np.testing.assert_allclose(f.grad(x), Q @ x + b)
    np.testing.assert_allclose(f.hess(x), Q)


def test_integrate_segment_exponential():
    # int_0^1 e^t dt = e - 1
    val = integrate_segment(lambda t: np.exp(t), 0.0, 1.0)
    assert float(val) == pytest.approx(np.e - 1.0, rel=1e-12)


def test_integrate_segment_vector_valued():
    val = integrate_segment(lambda t: np.array([np.cos(t), 2.0 * t]), 0.0, np.pi / 2)
    np.testing.assert_allclose(val, [1.0, (np.pi / 2) ** 2], atol=1e-10)


def test_integrate_segment_budget_exhausted():
    # oscillation far beyond the node resolution never stabilizes at tol 0
    with pytest.raises(ConvergenceError):
        integrate_segment(lambda t: np.sin(1e6 * t), 0.0, 1.0, tol=0.0, nodes=4,
                          max_doublings=2)


def test_validate_scalar_field_catches_wrong_gradient():
    box = BoxDomain.cube(2)
    good = quadratic_field(np.eye(2), box)
    report = validate_scalar_field(good)
    assert report["grad_gap"] < 1e-7

    bad = ScalarField(2, lambda x: 0.5 * float(x @ x), box,
                      gradient=lambda x: 2.0 * x)
    with pytest.raises(AssumptionError):
        validate_scalar_field(bad)


def test_validate_metric_field():
    box = BoxDomain.cube(2)
    worst = validate_metric_field(MetricField.constant(np.diag([1.0, -2.0]), box))
    assert worst == 0.0
    with pytest.raises(AssumptionError):
        validate_metric_field(
            MetricField(2, lambda x: np.array([[1.0, x[0]], [0.0, 1.0]]), box))
