"""Reciprocity checks and potential reconstruction for nonlinear systems.

The full check verifies, at sampled state-input points, symmetry of the
metric-weighted state Jacobian, signature-symmetry of the output map in the
input, and the cross condition tying the input matrix to the output
state-Jacobian.  When the three hold, the drift and output assemble into a
single potential which is reconstructed here by line integrals.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .core import (
    AffineNonlinearSystem,
    BoxDomain,
    DimensionMismatchError,
    MetricField,
    NonlinearSystem,
    ScalarField,
    SignatureMatrix,
    finite_difference_jacobian,
    integrate_segment,
    symmetry_residual,
    as_vector,
)

__all__ = [
    "ReciprocityReport",
    "PotentialFunction",
    "check_reciprocity",
    "check_reciprocity_affine",
    "check_reciprocity_hessian",
    "is_hessian_metric",
    "reconstruct_K",
    "reconstruct_potential",
    "sample_state_input_points",
]


@dataclass(frozen=True)
class ReciprocityReport:
    residual_state: float
    residual_output: float
    residual_cross: float
    reciprocal: bool
    points_tested: int

    @property
    def max_residual(self) -> float:
        return max(self.residual_state, self.residual_output, self.residual_cross)


def sample_state_input_points(domain: BoxDomain, u_box: BoxDomain, n: int = 200,
                              seed: int = 0):
    """Low-discrepancy (x, u) pairs over the product box."""
    prod = BoxDomain.product(domain.shrink(0.95), u_box)
    pts = prod.sample(n, seed=seed)
    nx = domain.dim
    return [(p[:nx], p[nx:]) for p in pts]


def _resolve_points(sys_domain: BoxDomain, nu: int, sample_points, u_box, n_samples, seed):
    if sample_points is not None:
        return [(as_vector(x), as_vector(u, nu)) for x, u in sample_points]
    if u_box is None:
        u_box = BoxDomain.cube(nu, 1.0)
    return sample_state_input_points(sys_domain, u_box, n_samples, seed)


def check_reciprocity(sys: NonlinearSystem, G: MetricField, sigma: SignatureMatrix,
                      sample_points=None, tol: float = 1e-6,
                      u_box: Optional[BoxDomain] = None, n_samples: int = 200,
                      seed: int = 0) -> ReciprocityReport:
    """Sampled residuals of the three reciprocity conditions.

    residual_state  : asymmetry of d(G(x) F(x,u))/dx,
    residual_output : asymmetry of sigma dH/du,
    residual_cross  : max |G(x) dF/du - (dH/dx)^T sigma|.

    The metric is validated (symmetry, determinant floor) at every point.
    """
    if sigma.m != sys.nu:
        raise DimensionMismatchError("signature size must match input count")
    pts = _resolve_points(sys.domain, sys.nu, sample_points, u_box, n_samples, seed)
    r_state = r_out = r_cross = 0.0
    sm = sigma.matrix
    for x, u in pts:
        G.checked(x)
        J = finite_difference_jacobian(lambda xx: G(xx) @ sys.F(xx, u), x)
        r_state = max(r_state, symmetry_residual(J))
        Hu = sys.jac_H_u(x, u)
        r_out = max(r_out, symmetry_residual(sm @ Hu))
        gap = G(x) @ sys.jac_F_u(x, u) - sys.jac_H_x(x, u).T @ sm
        r_cross = max(r_cross, float(np.max(np.abs(gap))))
    ok = max(r_state, r_out, r_cross) <= tol
    return ReciprocityReport(r_state, r_out, r_cross, bool(ok), len(pts))


def check_reciprocity_affine(sys: AffineNonlinearSystem, G: MetricField,
                             sigma: SignatureMatrix, sample_points=None,
                             tol: float = 1e-6, n_samples: int = 200,
                             seed: int = 0) -> ReciprocityReport:
    """Input-affine specialization: the conditions no longer involve u.

    residual_state  : asymmetry of d(G f)/dx and of every d(G g_j)/dx,
    residual_output : max |sigma k(x) - k(x)^T sigma|,
    residual_cross  : max |G(x) g(x) - (dh/dx)^T sigma|.
    """
    if sigma.m != sys.nu:
        raise DimensionMismatchError("signature size must match input count")
    if sample_points is None:
        sample_points = sys.domain.shrink(0.95).sample(n_samples, seed=seed)
    sm = sigma.matrix
    r_state = r_out = r_cross = 0.0
    for x in sample_points:
        x = as_vector(x, sys.nx)
        G.checked(x)
        Jf = finite_difference_jacobian(lambda xx: G(xx) @ as_vector(sys.f(xx), sys.nx), x)
        r_state = max(r_state, symmetry_residual(Jf))
        for j in range(sys.nu):
            Jg = finite_difference_jacobian(
                lambda xx, jj=j: G(xx) @ np.asarray(sys.g(xx), dtype=float).reshape(sys.nx, sys.nu)[:, jj], x)
            r_state = max(r_state, symmetry_residual(Jg))
        kx = np.asarray(sys.k(x), dtype=float).reshape(sys.nu, sys.nu)
        r_out = max(r_out, float(np.max(np.abs(sm @ kx - kx.T @ sm))))
        gap = G(x) @ np.asarray(sys.g(x), dtype=float).reshape(sys.nx, sys.nu) - sys.jac_h(x).T @ sm
        r_cross = max(r_cross, float(np.max(np.abs(gap))))
    ok = max(r_state, r_out, r_cross) <= tol
    return ReciprocityReport(r_state, r_out, r_cross, bool(ok), len(sample_points))


def check_reciprocity_hessian(sys: NonlinearSystem, K: ScalarField,
                              sigma: SignatureMatrix, sample_points=None,
                              tol: float = 1e-6, u_box: Optional[BoxDomain] = None,
                              n_samples: int = 200, seed: int = 0) -> ReciprocityReport:
    """Reciprocity for a Hessian metric G = hess K.

    The state condition simplifies to G-self-adjointness of the state
    Jacobian, G dF/dx = (dF/dx)^T G; output and cross conditions are as in
    the general check.
    """
    if sigma.m != sys.nu:
        raise DimensionMismatchError("signature size must match input count")
    G = MetricField.from_hessian(K)
    pts = _resolve_points(sys.domain, sys.nu, sample_points, u_box, n_samples, seed)
    sm = sigma.matrix
    r_state = r_out = r_cross = 0.0
    for x, u in pts:
        Gx = G.checked(x)
        Fx = sys.jac_F_x(x, u)
        r_state = max(r_state, float(np.max(np.abs(Gx @ Fx - Fx.T @ Gx))))
        Hu = sys.jac_H_u(x, u)
        r_out = max(r_out, symmetry_residual(sm @ Hu))
        gap = Gx @ sys.jac_F_u(x, u) - sys.jac_H_x(x, u).T @ sm
        r_cross = max(r_cross, float(np.max(np.abs(gap))))
    ok = max(r_state, r_out, r_cross) <= tol
    return ReciprocityReport(r_state, r_out, r_cross, bool(ok), len(pts))


METRIC_PARTIAL_STEP = 1e-5


def _metric_partials(G: MetricField, x: np.ndarray, step: float) -> np.ndarray:
    """dG[i] = dG/dx_i by central differences, shape (n, n, n)."""
    n = G.dim
    out = np.empty((n, n, n))
    h = np.maximum(step, step * np.abs(x))
    for i in range(n):
        e = np.zeros(n)
        e[i] = h[i]
        out[i] = (G(x + e) - G(x - e)) / (2 * h[i])
    return out


def is_hessian_metric(G: MetricField, sample_points=None, tol: float = 1e-6,
                      n_samples: int = 50, seed: int = 0,
                      step: float = METRIC_PARTIAL_STEP) -> dict:
    """Closedness test dG_jk/dx_i = dG_ik/dx_j at sampled points."""
    if sample_points is None:
        sample_points = G.domain.shrink(0.9).sample(n_samples, seed=seed)
    worst = 0.0
    for x in sample_points:
        x = as_vector(x, G.dim)
        dG = _metric_partials(G, x, step)
        worst = max(worst, float(np.max(np.abs(dG - dG.transpose(1, 0, 2)))))
    return {"hessian": bool(worst <= tol), "residual": worst}


def reconstruct_K(G: MetricField, base_point, quad_tol: float = 1e-8,
                  check_tol: float = 1e-6, verify: bool = True,
                  seed: int = 0) -> ScalarField:
    """Rebuild a generating function whose Hessian is the given metric.

    Uses the homotopy construction along straight segments from the base
    point: the gradient is chi(x) = int_0^1 G(x0 + t(x-x0)) (x-x0) dt and
    the value integrates chi once more along the same segment.  Both
    integrals use adaptive composite Gauss-Legendre quadrature.
    """
    x0 = as_vector(base_point, G.dim)
    if verify:
        rep = is_hessian_metric(G, tol=check_tol, seed=seed)
        if not rep["hessian"]:
            raise DimensionMismatchError(
                f"metric is not a Hessian metric (closedness residual {rep['residual']:.3e}); "
                "the line integral would be path dependent")

    def chi(x):
        x = as_vector(x, G.dim)
        d = x - x0
        if not np.any(d):
            return np.zeros(G.dim)
        return integrate_segment(lambda t: G(x0 + t * d) @ d, 0.0, 1.0, tol=quad_tol)

    def value(x):
        x = as_vector(x, G.dim)
        d = x - x0
        if not np.any(d):
            return 0.0
        return float(integrate_segment(lambda t: float(chi(x0 + t * d) @ d), 0.0, 1.0,
                                       tol=quad_tol))

    return ScalarField(G.dim, value, G.domain, gradient=chi)


@dataclass(frozen=True)
class PotentialFunction:
    """Joint potential V(x, u) with -dV/dx = G F and -dV/du = sigma H."""

    V: ScalarField
    base_point: tuple
    nx: int
    nu: int

    def split_grad(self, x, u):
        g = self.V.grad(np.concatenate([as_vector(x, self.nx), as_vector(u, self.nu)]))
        return g[:self.nx], g[self.nx:]


def reconstruct_potential(sys: NonlinearSystem, G: MetricField, sigma: SignatureMatrix,
                          base_point, u_box: Optional[BoxDomain] = None,
                          quad_tol: float = 1e-8, verify: bool = True,
                          verify_tol: float = 1e-5, n_samples: int = 60,
                          seed: int = 0) -> PotentialFunction:
    """Line-integral reconstruction of the potential of a reciprocal system.

    V(x,u) = -int_0^1 [ (G F)(gamma(t)) . (x-x0) + (sigma H)(gamma(t)) . (u-u0) ] dt
    along the straight segment gamma from (x0,u0) to (x,u).  Requires the
    reciprocity residuals to sit below verify_tol, otherwise the integral is
    path dependent and an error is raised.
    """
    x0 = as_vector(base_point[0], sys.nx)
    u0 = as_vector(base_point[1], sys.nu)
    if u_box is None:
        u_box = BoxDomain.cube(sys.nu, 1.0)
    if verify:
        rep = check_reciprocity(sys, G, sigma, tol=verify_tol, u_box=u_box,
                                n_samples=n_samples, seed=seed)
        if not rep.reciprocal:
            raise DimensionMismatchError(
                "system fails the reciprocity check "
                f"(residuals {rep.residual_state:.2e}/{rep.residual_output:.2e}/"
                f"{rep.residual_cross:.2e} > {verify_tol}); potential is path dependent")

    def value(w):
        w = as_vector(w, sys.nx + sys.nu)
        x, u = w[:sys.nx], w[sys.nx:]
        dx, du = x - x0, u - u0
        if not (np.any(dx) or np.any(du)):
            return 0.0

        def integrand(t):
            xt = x0 + t * dx
            ut = u0 + t * du
            a = float((G(xt) @ as_vector(sys.F(xt, ut), sys.nx)) @ dx)
            b = float(sigma.apply(sys.H(xt, ut)) @ du)
            return a + b

        return -float(integrate_segment(integrand, 0.0, 1.0, tol=quad_tol))

    def gradient(w):
        w = as_vector(w, sys.nx + sys.nu)
        x, u = w[:sys.nx], w[sys.nx:]
        gx = -(G(x) @ as_vector(sys.F(x, u), sys.nx))
        gu = -sigma.apply(sys.H(x, u))
        return np.concatenate([gx, gu])

    field = ScalarField(sys.nx + sys.nu, value, BoxDomain.product(sys.domain, u_box),
                        gradient=gradient)
    return PotentialFunction(V=field, base_point=(x0, u0), nx=sys.nx, nu=sys.nu)
