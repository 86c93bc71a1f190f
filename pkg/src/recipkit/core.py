"""Core numerical vocabulary shared by the rest of the toolkit.

Box domains, scalar and metric fields with finite-difference fallbacks,
signature matrices, and input-state-output system containers.  Objects are
immutable after construction and their evaluation maps are pure functions.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.stats import qmc

__all__ = [
    "RecipkitError",
    "DimensionMismatchError",
    "DomainError",
    "SingularMatrixError",
    "ConvergenceError",
    "AssumptionError",
    "SchemaError",
    "BoxDomain",
    "ScalarField",
    "MetricField",
    "SignatureMatrix",
    "NonlinearSystem",
    "AffineNonlinearSystem",
    "Polynomial",
    "quadratic_field",
    "finite_difference_gradient",
    "finite_difference_jacobian",
    "hessian_from_value",
    "symmetry_residual",
    "gauss_legendre_panels",
    "integrate_segment",
    "validate_scalar_field",
    "validate_metric_field",
]

# Central-difference step floor; relative scaling keeps the step meaningful
# for components far from the origin.
GRAD_STEP = 1e-6
# Second differences of raw values need a larger step to beat rounding noise.
HESS_VALUE_STEP = 1e-4
DET_FLOOR = 1e-12


class RecipkitError(Exception):
    """Base class for all toolkit errors."""


class DimensionMismatchError(RecipkitError):
    pass


class DomainError(RecipkitError):
    pass


class SingularMatrixError(RecipkitError):
    pass


class ConvergenceError(RecipkitError):
    pass


class AssumptionError(RecipkitError):
    """A named structural assumption failed a numerical check."""

    def __init__(self, name: str, message: str, report=None):
        super().__init__(f"assumption {name}: {message}")
        self.name = name
        self.report = report


class SchemaError(RecipkitError):
    pass


def as_vector(x, n: Optional[int] = None) -> np.ndarray:
    v = np.atleast_1d(np.asarray(x, dtype=float))
    if v.ndim != 1:
        raise DimensionMismatchError(f"expected a vector, got shape {v.shape}")
    if n is not None and v.shape[0] != n:
        raise DimensionMismatchError(f"expected length {n}, got {v.shape[0]}")
    return v


def as_matrix(M, shape=None) -> np.ndarray:
    A = np.atleast_2d(np.asarray(M, dtype=float))
    if shape is not None and A.shape != tuple(shape):
        raise DimensionMismatchError(f"expected shape {tuple(shape)}, got {A.shape}")
    return A


def symmetry_residual(M) -> float:
    """Max-abs deviation of a square matrix from its transpose.

    Returns 0.0 exactly for symmetrized inputs such as ``M + M.T``.
    """
    A = np.asarray(M, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionMismatchError(f"symmetry_residual needs a square matrix, got {A.shape}")
    if A.size == 0:
        return 0.0
    return float(np.max(np.abs(A - A.T)))


@dataclass(frozen=True)
class BoxDomain:
    """Axis-aligned box with strictly ordered bounds."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = as_vector(self.lower)
        hi = as_vector(self.upper, lo.shape[0])
        if not np.all(lo < hi):
            raise DomainError("box bounds must satisfy lower < upper componentwise")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def dim(self) -> int:
        return self.lower.shape[0]

    @property
    def center(self) -> np.ndarray:
        return 0.5 * (self.lower + self.upper)

    @property
    def width(self) -> np.ndarray:
        return self.upper - self.lower

    def contains(self, x, margin: float = 0.0) -> bool:
        v = as_vector(x, self.dim)
        pad = margin * self.width
        return bool(np.all(v >= self.lower - pad) and np.all(v <= self.upper + pad))

    def sample(self, n: int, seed: int = 0) -> np.ndarray:
        """n low-discrepancy points strictly inside the box (Halton)."""
        eng = qmc.Halton(d=self.dim, scramble=True, seed=seed)
        pts = eng.random(n)
        shrink = 1e-9 * self.width
        return (self.lower + shrink) + pts * (self.width - 2 * shrink)

    def grid(self, resolution: int) -> np.ndarray:
        """Cell-center grid of resolution**dim points, strictly inside."""
        axes = [
            self.lower[i] + (np.arange(resolution) + 0.5) / resolution * self.width[i]
            for i in range(self.dim)
        ]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)

    def shrink(self, factor: float) -> "BoxDomain":
        c, w = self.center, self.width
        return BoxDomain(c - 0.5 * factor * w, c + 0.5 * factor * w)

    @staticmethod
    def product(a: "BoxDomain", b: "BoxDomain") -> "BoxDomain":
        return BoxDomain(np.concatenate([a.lower, b.lower]), np.concatenate([a.upper, b.upper]))

    @staticmethod
    def cube(dim: int, halfwidth: float = 1.0, center: float = 0.0) -> "BoxDomain":
        c = np.full(dim, float(center))
        return BoxDomain(c - halfwidth, c + halfwidth)


def _default_steps(x: np.ndarray, base: float) -> np.ndarray:
    return np.maximum(base, base * np.abs(x))


def finite_difference_gradient(f: Callable, x, h: Optional[float] = None,
                               domain: Optional[BoxDomain] = None) -> np.ndarray:
    """Central-difference gradient of a scalar map.

    Parameters
    ----------
    f : callable
        Scalar-valued map of a vector argument.
    x : array_like
        Evaluation point.
    h : float, optional
        Step override; default max(1e-6, 1e-6*|x_i|) per component.
    domain : BoxDomain, optional
        When given, x and every stencil point must lie inside, otherwise
        DomainError is raised.
    """
    v = as_vector(x)
    steps = np.full(v.shape, float(h)) if h is not None else _default_steps(v, GRAD_STEP)
    if domain is not None and not domain.contains(v):
        raise DomainError(f"point {v} outside domain")
    g = np.empty_like(v)
    for i in range(v.shape[0]):
        e = np.zeros_like(v)
        e[i] = steps[i]
        if domain is not None and not (domain.contains(v + e) and domain.contains(v - e)):
            raise DomainError(f"stencil around {v} leaves domain in component {i}")
        g[i] = (f(v + e) - f(v - e)) / (2 * steps[i])
    return g


def finite_difference_jacobian(F: Callable, x, h: Optional[float] = None,
                               domain: Optional[BoxDomain] = None) -> np.ndarray:
    """Central-difference Jacobian of a vector map; rows index outputs."""
    v = as_vector(x)
    steps = np.full(v.shape, float(h)) if h is not None else _default_steps(v, GRAD_STEP)
    if domain is not None and not domain.contains(v):
        raise DomainError(f"point {v} outside domain")
    cols = []
    for i in range(v.shape[0]):
        e = np.zeros_like(v)
        e[i] = steps[i]
        if domain is not None and not (domain.contains(v + e) and domain.contains(v - e)):
            raise DomainError(f"stencil around {v} leaves domain in component {i}")
        cols.append((np.asarray(F(v + e), dtype=float) - np.asarray(F(v - e), dtype=float))
                    / (2 * steps[i]))
    return np.stack(cols, axis=-1)


def hessian_from_value(f: Callable, x, h: Optional[float] = None) -> np.ndarray:
    """Second central differences of a scalar map; symmetrized."""
    v = as_vector(x)
    steps = np.full(v.shape, float(h)) if h is not None else _default_steps(v, HESS_VALUE_STEP)
    n = v.shape[0]
    H = np.empty((n, n))
    f0 = f(v)
    for i in range(n):
        ei = np.zeros(n)
        ei[i] = steps[i]
        H[i, i] = (f(v + ei) - 2 * f0 + f(v - ei)) / steps[i] ** 2
        for j in range(i + 1, n):
            ej = np.zeros(n)
            ej[j] = steps[j]
            H[i, j] = (f(v + ei + ej) - f(v + ei - ej) - f(v - ei + ej) + f(v - ei - ej)) \
                / (4 * steps[i] * steps[j])
            H[j, i] = H[i, j]
    return H


@dataclass(frozen=True)
class ScalarField:
    """Scalar map on a box with optional analytic gradient/Hessian.

    Missing derivative callables fall back to central finite differences.
    The domain governs sampling and validation; plain evaluation outside
    the box is permitted whenever the underlying callable allows it.
    """

    dim: int
    value: Callable[[np.ndarray], float]
    domain: BoxDomain
    gradient: Optional[Callable[[np.ndarray], np.ndarray]] = None
    hessian: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def __post_init__(self):
        if self.domain.dim != self.dim:
            raise DimensionMismatchError(
                f"field dim {self.dim} vs domain dim {self.domain.dim}")

    def __call__(self, x) -> float:
        return float(self.value(as_vector(x, self.dim)))

    def grad(self, x) -> np.ndarray:
        v = as_vector(x, self.dim)
        if self.gradient is not None:
            return as_vector(self.gradient(v), self.dim)
        return finite_difference_gradient(self.value, v)

    def hess(self, x) -> np.ndarray:
        v = as_vector(x, self.dim)
        if self.hessian is not None:
            return as_matrix(self.hessian(v), (self.dim, self.dim))
        if self.gradient is not None:
            J = finite_difference_jacobian(self.gradient, v)
            return 0.5 * (J + J.T)
        return hessian_from_value(self.value, v)

    def shifted(self, offset: float) -> "ScalarField":
        return ScalarField(self.dim, lambda x: self.value(x) + offset, self.domain,
                           self.gradient, self.hessian)


@dataclass(frozen=True)
class MetricField:
    """Symmetric invertible matrix field x -> G(x) on a box."""

    dim: int
    eval: Callable[[np.ndarray], np.ndarray]
    domain: BoxDomain
    det_floor: float = DET_FLOOR

    def __call__(self, x) -> np.ndarray:
        v = as_vector(x, self.dim)
        G = as_matrix(self.eval(v), (self.dim, self.dim))
        return G

    def checked(self, x, sym_tol: float = 1e-10) -> np.ndarray:
        G = self(x)
        r = symmetry_residual(G)
        if r > sym_tol:
            raise AssumptionError("metric-symmetry",
                                  f"asymmetry {r:.3e} at x={as_vector(x)}")
        if abs(np.linalg.det(G)) <= self.det_floor:
            raise SingularMatrixError(
                f"metric determinant below floor {self.det_floor} at x={as_vector(x)}")
        return G

    @staticmethod
    def constant(M, domain: BoxDomain) -> "MetricField":
        A = as_matrix(M)
        return MetricField(A.shape[0], lambda x: A, domain)

    @staticmethod
    def from_hessian(K: ScalarField) -> "MetricField":
        return MetricField(K.dim, lambda x: K.hess(x), K.domain)


@dataclass(frozen=True)
class SignatureMatrix:
    """Diagonal matrix with entries in {+1, -1}; its own inverse."""

    signs: np.ndarray

    def __post_init__(self):
        s = np.atleast_1d(np.asarray(self.signs, dtype=int))
        if s.ndim != 1 or not np.all(np.abs(s) == 1):
            raise DimensionMismatchError("signature entries must be +1 or -1")
        object.__setattr__(self, "signs", s)

    @property
    def m(self) -> int:
        return self.signs.shape[0]

    @property
    def matrix(self) -> np.ndarray:
        return np.diag(self.signs.astype(float))

    def apply(self, v) -> np.ndarray:
        return self.signs * as_vector(v, self.m)

    def conjugate_rows(self, M) -> np.ndarray:
        return self.signs[:, None] * as_matrix(M)

    @property
    def is_identity(self) -> bool:
        return bool(np.all(self.signs == 1))

    @staticmethod
    def identity(m: int) -> "SignatureMatrix":
        return SignatureMatrix(np.ones(m, dtype=int))

    @staticmethod
    def minus_identity(m: int) -> "SignatureMatrix":
        return SignatureMatrix(-np.ones(m, dtype=int))


@dataclass(frozen=True)
class NonlinearSystem:
    """Input-state-output system x_dot = F(x,u), y = H(x,u)."""

    nx: int
    nu: int
    F: Callable[[np.ndarray, np.ndarray], np.ndarray]
    H: Callable[[np.ndarray, np.ndarray], np.ndarray]
    domain: BoxDomain
    dF_dx: Optional[Callable] = None
    dF_du: Optional[Callable] = None
    dH_dx: Optional[Callable] = None
    dH_du: Optional[Callable] = None

    def __post_init__(self):
        if self.domain.dim != self.nx:
            raise DimensionMismatchError("state domain dimension mismatch")

    def jac_F_x(self, x, u) -> np.ndarray:
        if self.dF_dx is not None:
            return as_matrix(self.dF_dx(x, u), (self.nx, self.nx))
        uu = as_vector(u, self.nu)
        return finite_difference_jacobian(lambda xx: self.F(xx, uu), x)

    def jac_F_u(self, x, u) -> np.ndarray:
        if self.dF_du is not None:
            return as_matrix(self.dF_du(x, u), (self.nx, self.nu))
        xx = as_vector(x, self.nx)
        return finite_difference_jacobian(lambda uu: self.F(xx, uu), u)

    def jac_H_x(self, x, u) -> np.ndarray:
        if self.dH_dx is not None:
            return as_matrix(self.dH_dx(x, u), (self.nu, self.nx))
        uu = as_vector(u, self.nu)
        return finite_difference_jacobian(lambda xx: self.H(xx, uu), x)

    def jac_H_u(self, x, u) -> np.ndarray:
        if self.dH_du is not None:
            return as_matrix(self.dH_du(x, u), (self.nu, self.nu))
        xx = as_vector(x, self.nx)
        return finite_difference_jacobian(lambda uu: self.H(xx, uu), u)


@dataclass(frozen=True)
class AffineNonlinearSystem:
    """Input-affine system x_dot = f(x) + g(x)u, y = h(x) + k(x)u."""

    nx: int
    nu: int
    f: Callable[[np.ndarray], np.ndarray]
    g: Callable[[np.ndarray], np.ndarray]          # (nx, nu)
    h: Callable[[np.ndarray], np.ndarray]
    k: Callable[[np.ndarray], np.ndarray]          # (nu, nu)
    domain: BoxDomain
    df_dx: Optional[Callable] = None               # (nx, nx)
    dg_dx: Optional[Callable] = None               # (nu, nx, nx): [j] = d g_j / dx
    dh_dx: Optional[Callable] = None               # (nu, nx)

    def jac_f(self, x) -> np.ndarray:
        if self.df_dx is not None:
            return as_matrix(self.df_dx(x), (self.nx, self.nx))
        return finite_difference_jacobian(self.f, x)

    def jac_g(self, x) -> np.ndarray:
        """Stack of per-column Jacobians, shape (nu, nx, nx)."""
        if self.dg_dx is not None:
            J = np.asarray(self.dg_dx(x), dtype=float)
            if J.shape != (self.nu, self.nx, self.nx):
                raise DimensionMismatchError(f"dg_dx shape {J.shape}")
            return J
        cols = []
        for j in range(self.nu):
            cols.append(finite_difference_jacobian(
                lambda xx, jj=j: as_matrix(self.g(xx), (self.nx, self.nu))[:, jj], x))
        return np.stack(cols, axis=0)

    def jac_h(self, x) -> np.ndarray:
        if self.dh_dx is not None:
            return as_matrix(self.dh_dx(x), (self.nu, self.nx))
        return finite_difference_jacobian(self.h, x)

    def to_general(self) -> NonlinearSystem:
        def F(x, u):
            return as_vector(self.f(x), self.nx) + as_matrix(self.g(x), (self.nx, self.nu)) @ as_vector(u, self.nu)

        def H(x, u):
            return as_vector(self.h(x), self.nu) + as_matrix(self.k(x), (self.nu, self.nu)) @ as_vector(u, self.nu)

        def dF_dx(x, u):
            u = as_vector(u, self.nu)
            return self.jac_f(x) + np.einsum("j,jab->ab", u, self.jac_g(x))

        return NonlinearSystem(
            self.nx, self.nu, F, H, self.domain,
            dF_dx=dF_dx,
            dF_du=lambda x, u: as_matrix(self.g(x), (self.nx, self.nu)),
            dH_dx=lambda x, u: self.jac_h(x),
            dH_du=lambda x, u: as_matrix(self.k(x), (self.nu, self.nu)),
        )


@dataclass(frozen=True)
class Polynomial:
    """Multivariate polynomial sum_t c_t * prod_i x_i**e_ti with analytic derivatives."""

    dim: int
    terms: tuple

    def __post_init__(self):
        norm = []
        for exps, coeff in self.terms:
            e = tuple(int(v) for v in exps)
            if len(e) != self.dim or any(v < 0 for v in e):
                raise DimensionMismatchError(f"bad exponent tuple {exps}")
            norm.append((e, float(coeff)))
        object.__setattr__(self, "terms", tuple(norm))

    def value(self, x) -> float:
        v = as_vector(x, self.dim)
        total = 0.0
        for exps, c in self.terms:
            total += c * np.prod(v ** np.array(exps))
        return float(total)

    def grad(self, x) -> np.ndarray:
        v = as_vector(x, self.dim)
        g = np.zeros(self.dim)
        for exps, c in self.terms:
            e = np.array(exps)
            for i in range(self.dim):
                if e[i] == 0:
                    continue
                ee = e.copy()
                ee[i] -= 1
                g[i] += c * e[i] * np.prod(v ** ee)
        return g

    def hess(self, x) -> np.ndarray:
        v = as_vector(x, self.dim)
        H = np.zeros((self.dim, self.dim))
        for exps, c in self.terms:
            e = np.array(exps)
            for i in range(self.dim):
                if e[i] == 0:
                    continue
                for j in range(self.dim):
                    mult = e[i] * (e[j] - (1 if i == j else 0))
                    if mult == 0:
                        continue
                    ee = e.copy()
                    ee[i] -= 1
                    ee[j] -= 1
                    H[i, j] += c * mult * np.prod(v ** ee)
        return 0.5 * (H + H.T)

    def to_field(self, domain: BoxDomain) -> ScalarField:
        return ScalarField(self.dim, self.value, domain, self.grad, self.hess)


def quadratic_field(Q, domain: BoxDomain, lin=None, const: float = 0.0) -> ScalarField:
    """Field (1/2) x^T Q x + lin^T x + const with analytic derivatives."""
    Qm = as_matrix(Q)
    n = Qm.shape[0]
    Qs = 0.5 * (Qm + Qm.T)
    b = np.zeros(n) if lin is None else as_vector(lin, n)

    return ScalarField(
        n,
        lambda x: 0.5 * float(x @ Qs @ x) + float(b @ x) + const,
        domain,
        gradient=lambda x: Qs @ x + b,
        hessian=lambda x: Qs,
    )


def gauss_legendre_panels(f: Callable, a: float, b: float, panels: int, nodes: int = 32):
    """Composite Gauss-Legendre quadrature of a scalar- or vector-valued map."""
    xs, ws = leggauss(nodes)
    h = (b - a) / panels
    total = None
    for p in range(panels):
        lo = a + p * h
        mid = lo + 0.5 * h
        for xi, wi in zip(xs, ws):
            val = np.asarray(f(mid + 0.5 * h * xi), dtype=float) * (wi * 0.5 * h)
            total = val if total is None else total + val
    return total


def integrate_segment(f: Callable, a: float = 0.0, b: float = 1.0, tol: float = 1e-8,
                      nodes: int = 32, max_doublings: int = 10):
    """Adaptive composite Gauss-Legendre: double panel count until stable.

    Stops when successive estimates differ by less than tol*(1+|estimate|);
    raises ConvergenceError if the budget of doublings is exhausted.
    """
    panels = 1
    prev = gauss_legendre_panels(f, a, b, panels, nodes)
    for _ in range(max_doublings):
        panels *= 2
        cur = gauss_legendre_panels(f, a, b, panels, nodes)
        err = float(np.max(np.abs(np.atleast_1d(cur - prev))))
        scale = 1.0 + float(np.max(np.abs(np.atleast_1d(cur))))
        if err <= tol * scale:
            return cur
        prev = cur
    raise ConvergenceError(
        f"quadrature on [{a},{b}] did not stabilize below {tol} within {max_doublings} doublings")


def validate_scalar_field(field: ScalarField, n_samples: int = 20, seed: int = 0,
                          grad_tol: float = 1e-5, hess_sym_tol: float = 1e-10,
                          hess_tol: float = 1e-4) -> dict:
    """Spot-check analytic derivatives of a field against finite differences.

    Returns a dict of worst-case residuals; raises AssumptionError when a
    supplied derivative disagrees with its finite-difference counterpart.
    """
    pts = field.domain.shrink(0.9).sample(n_samples, seed=seed)
    out = {"grad_gap": 0.0, "hess_asym": 0.0, "hess_gap": 0.0}
    for x in pts:
        if field.gradient is not None:
            ga = field.grad(x)
            gf = finite_difference_gradient(field.value, x)
            rel = np.max(np.abs(ga - gf)) / (1.0 + np.max(np.abs(ga)))
            out["grad_gap"] = max(out["grad_gap"], float(rel))
        if field.hessian is not None:
            Ha = field.hess(x)
            out["hess_asym"] = max(out["hess_asym"], symmetry_residual(Ha))
            if field.gradient is not None:
                Hf = finite_difference_jacobian(field.gradient, x)
            else:
                Hf = hessian_from_value(field.value, x)
            rel = np.max(np.abs(Ha - 0.5 * (Hf + Hf.T))) / (1.0 + np.max(np.abs(Ha)))
            out["hess_gap"] = max(out["hess_gap"], float(rel))
    if out["grad_gap"] > grad_tol:
        raise AssumptionError("field-gradient", f"gradient disagrees with FD: {out['grad_gap']:.3e}")
    if out["hess_asym"] > hess_sym_tol:
        raise AssumptionError("field-hessian-symmetry", f"asymmetry {out['hess_asym']:.3e}")
    if out["hess_gap"] > hess_tol:
        raise AssumptionError("field-hessian", f"hessian disagrees with FD: {out['hess_gap']:.3e}")
    return out


def validate_metric_field(G: MetricField, n_samples: int = 20, seed: int = 0,
                          sym_tol: float = 1e-10) -> float:
    """Check symmetry and invertibility of G at sampled points; returns worst asymmetry."""
    worst = 0.0
    for x in G.domain.shrink(0.9).sample(n_samples, seed=seed):
        worst = max(worst, symmetry_residual(G.checked(x, sym_tol)))
    return worst
