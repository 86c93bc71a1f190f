"""Legendre transforms of nondegenerate generating functions.

The conjugate K*(z) = z.x - K(x) is evaluated pointwise by solving
grad K(x) = z with a damped Newton iteration; the co-domain is represented
implicitly (a point z belongs to it exactly when Newton converges).
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .core import (
    BoxDomain,
    ConvergenceError,
    DomainError,
    ScalarField,
    SingularMatrixError,
    as_vector,
)

__all__ = [
    "LegendrePair",
    "HomogeneityReport",
    "legendre_transform",
    "make_legendre_pair",
    "tilde_function",
    "homogeneity_check",
    "euler_degree_check",
]

NEWTON_TOL = 1e-12
NEWTON_MAX_ITER = 80
# Iterates may leave the nominal box slightly; reject only beyond this inflation.
BOX_INFLATE = 0.25


def _solve_gradient_equation(K: ScalarField, z: np.ndarray, x0: np.ndarray,
                             tol: float = NEWTON_TOL,
                             max_iter: int = NEWTON_MAX_ITER) -> np.ndarray:
    """Damped Newton solve of grad K(x) = z starting from x0.

    Convergence is measured relative to 1 + |z|; a line search that stalls
    within a small factor of that target returns the current iterate rather
    than failing on rounding noise.
    """
    box = K.domain
    lo = box.lower - BOX_INFLATE * box.width
    hi = box.upper + BOX_INFLATE * box.width
    goal = tol * (1.0 + float(np.linalg.norm(z)))
    x = np.array(x0, dtype=float)
    r = K.grad(x) - z
    rn = np.linalg.norm(r)
    for _ in range(max_iter):
        if rn <= goal:
            return x
        H = K.hess(x)
        try:
            step = np.linalg.solve(H, r)
        except np.linalg.LinAlgError as exc:
            raise SingularMatrixError(f"singular Hessian at x={x}") from exc
        lam = 1.0
        while True:
            cand = x - lam * step
            inside = np.all(cand >= lo) and np.all(cand <= hi)
            if inside:
                rc = K.grad(cand) - z
                rcn = np.linalg.norm(rc)
                if rcn < rn or rcn <= goal:
                    x, r, rn = cand, rc, rcn
                    break
            lam *= 0.5
            if lam < 1e-8:
                if rn <= 100.0 * goal:
                    return x
                raise ConvergenceError(
                    f"Newton stalled solving grad K = z at z={z} (residual {rn:.3e})")
    if rn <= goal:
        return x
    raise ConvergenceError(
        f"Newton did not reach residual {tol} for z={z} (got {rn:.3e}); "
        "z may lie outside the co-domain")


def legendre_transform(K: ScalarField, z, x_init=None, tol: float = NEWTON_TOL,
                       max_iter: int = NEWTON_MAX_ITER):
    """Pointwise conjugate: returns (x, K*(z)) with grad K(x) = z.

    Parameters
    ----------
    K : ScalarField
        Generating function with invertible Hessian along the Newton path.
    z : array_like
        Co-vector at which to evaluate the conjugate.
    x_init : array_like, optional
        Newton starting point; defaults to the domain center.
    """
    zz = as_vector(z, K.dim)
    x0 = K.domain.center if x_init is None else as_vector(x_init, K.dim)
    x = _solve_gradient_equation(K, zz, x0, tol, max_iter)
    return x, float(zz @ x - K(x))


class _WarmStartCache:
    """Nearest-neighbour warm starts for repeated conjugate solves.

    Results are init-only: the converged solution is identical (to the Newton
    tolerance) whatever starting point succeeds.
    """

    def __init__(self, capacity: int = 256):
        self.capacity = capacity
        self._zs: list = []
        self._xs: list = []
        self._lock = threading.Lock()

    def suggest(self, z: np.ndarray, fallback: np.ndarray) -> np.ndarray:
        with self._lock:
            if not self._zs:
                return fallback
            d = [float(np.linalg.norm(z - zc)) for zc in self._zs]
            return self._xs[int(np.argmin(d))]

    def store(self, z: np.ndarray, x: np.ndarray):
        with self._lock:
            if len(self._zs) >= self.capacity:
                self._zs.pop(0)
                self._xs.pop(0)
            self._zs.append(np.array(z))
            self._xs.append(np.array(x))


@dataclass(frozen=True)
class LegendrePair:
    """Generating function K together with its conjugate K*.

    forward maps x to z = grad K(x); inverse maps z back via Newton.
    """

    K: ScalarField
    Kstar: ScalarField
    forward: Callable[[np.ndarray], np.ndarray]
    inverse: Callable[[np.ndarray], np.ndarray]


def make_legendre_pair(K: ScalarField, samples: int = 200, seed: int = 0,
                       verify: bool = True, round_trip_tol: float = 1e-8,
                       biconjugate_tol: float = 1e-8, hessian_tol: float = 1e-6,
                       newton_tol: float = NEWTON_TOL) -> LegendrePair:
    """Construct K* with warm-started Newton inversion and verify the pair.

    Verification samples x in the domain of K, pushes z = grad K(x) (always a
    valid co-domain point) and checks

    * grad K*(grad K(x)) = x          within round_trip_tol,
    * hess K*(grad K(x)) = hess K(x)^-1  within hessian_tol,
    * (K*)*(x) = K(x)                 within biconjugate_tol,

    where the biconjugate is evaluated through the same generic Newton path
    applied to K*.  Raises ConvergenceError or AssumptionError on failure.
    """
    cache = _WarmStartCache()

    def inverse(z):
        zz = as_vector(z, K.dim)
        x0 = cache.suggest(zz, K.domain.center)
        c, w = K.domain.center, K.domain.width
        # offset restarts cover centers where the Hessian degenerates
        starts = (x0, c, c + 0.1 * w * np.sign(zz), c - 0.1 * w)
        err = None
        for s in starts:
            try:
                x = _solve_gradient_equation(K, zz, s, newton_tol)
            except (ConvergenceError, SingularMatrixError) as exc:
                err = exc
                continue
            cache.store(zz, x)
            return x
        raise err

    def star_value(z):
        zz = as_vector(z, K.dim)
        x = inverse(zz)
        return float(zz @ x - K(x))

    def star_grad(z):
        return inverse(z)

    def star_hess(z):
        x = inverse(z)
        return np.linalg.inv(K.hess(x))

    # Best-effort box for the conjugate: bounding box of pushed-forward samples.
    push = np.array([K.grad(x) for x in K.domain.sample(max(64, samples), seed=seed)])
    zlo, zhi = push.min(axis=0), push.max(axis=0)
    spread = np.maximum(zhi - zlo, 1e-6)
    zbox = BoxDomain(zlo - 0.05 * spread, zhi + 0.05 * spread).shrink(0.95)

    Kstar = ScalarField(K.dim, star_value, zbox, gradient=star_grad, hessian=star_hess)
    pair = LegendrePair(K=K, Kstar=Kstar, forward=lambda x: K.grad(x), inverse=inverse)

    if verify:
        worst_rt = worst_hess = worst_bi = 0.0
        for x in K.domain.shrink(0.98).sample(samples, seed=seed + 1):
            z = K.grad(x)
            xb = inverse(z)
            worst_rt = max(worst_rt, float(np.max(np.abs(xb - x))))
            Hgap = K.hess(x) @ star_hess(z) - np.eye(K.dim)
            worst_hess = max(worst_hess, float(np.max(np.abs(Hgap))))
            # biconjugate through the generic path on K*
            _, kss = legendre_transform(Kstar, x, x_init=z, tol=newton_tol)
            worst_bi = max(worst_bi, abs(kss - K(x)) / (1.0 + abs(K(x))))
        if worst_rt > round_trip_tol:
            raise ConvergenceError(f"round-trip grad K* o grad K gap {worst_rt:.3e}")
        if worst_hess > hessian_tol:
            raise ConvergenceError(f"Hessian-inverse identity gap {worst_hess:.3e}")
        if worst_bi > biconjugate_tol:
            raise ConvergenceError(f"biconjugation gap {worst_bi:.3e}")
    return pair


def tilde_function(S: ScalarField, pair: Optional[LegendrePair] = None,
                   verify: bool = True, samples: int = 60, seed: int = 0) -> ScalarField:
    """Pullback of S through the inverse gradient map: z -> S(grad S*(z)).

    The returned field carries the analytic gradient z -> hess S*(z) z, which
    vanishes at z = 0.  When S has positive semidefinite Hessian on the
    sampled domain, the returned function is minimized at z = 0.
    """
    p = pair if pair is not None else make_legendre_pair(S, samples=max(64, samples),
                                                         seed=seed, verify=False)

    def value(z):
        return S(p.inverse(z))

    def gradient(z):
        zz = as_vector(z, S.dim)
        return p.Kstar.hess(zz) @ zz

    tilde = ScalarField(S.dim, value, p.Kstar.domain, gradient=gradient)

    if verify:
        # identity S~(z) = z.grad S*(z) - S*(z) at pushed-forward points
        worst = 0.0
        psd = True
        vals = []
        xs = S.domain.shrink(0.95).sample(samples, seed=seed + 2)
        for x in xs:
            z = S.grad(x)
            lhs = tilde(z)
            rhs = float(z @ p.Kstar.grad(z)) - p.Kstar(z)
            worst = max(worst, abs(lhs - rhs) / (1.0 + abs(lhs)))
            vals.append(lhs)
            w = np.linalg.eigvalsh(S.hess(x))
            if w.min() < -1e-10:
                psd = False
        if worst > 1e-9:
            raise ConvergenceError(f"tilde identity gap {worst:.3e}")
        try:
            v0 = tilde(np.zeros(S.dim))
            g0 = gradient(np.zeros(S.dim))
            if float(np.max(np.abs(g0))) > 1e-8:
                raise ConvergenceError(f"tilde gradient at 0 is {g0}")
            if psd and vals and min(vals) < v0 - 1e-10:
                raise ConvergenceError(
                    f"tilde floor violated: min sample {min(vals):.6e} < value at 0 {v0:.6e}")
        except (ConvergenceError, SingularMatrixError) as exc:
            if isinstance(exc, ConvergenceError) and "tilde" in str(exc):
                raise
            # 0 outside the co-domain: floor/critical-point checks not applicable
    return tilde


@dataclass(frozen=True)
class HomogeneityReport:
    equal: bool
    degree2: bool
    max_conjugacy_gap: float
    max_scaling_gap: float


def homogeneity_check(K: ScalarField, tol: float = 1e-8, samples: int = 200,
                      seed: int = 0) -> HomogeneityReport:
    """Test K*(grad K(x)) = K(x) against quadratic homogeneity of K - K(0).

    Both properties are sampled on a sub-box chosen so that 2x stays inside
    the domain; the two booleans agree for fields with exact structure.
    Raises DomainError when the origin is not available for the K(0) offset.
    """
    box = K.domain
    if not (np.all(box.lower <= 0) and np.all(box.upper >= 0)):
        raise DomainError("homogeneity check needs 0 in the closed domain box")
    half = BoxDomain(0.5 * box.lower, 0.5 * box.upper)

    k0 = K(np.clip(np.zeros(K.dim), box.lower, box.upper))
    worst_eq = 0.0
    worst_deg = 0.0
    for x in half.shrink(0.98).sample(samples, seed=seed):
        z = K.grad(x)
        _, ks = legendre_transform(K, z, x_init=x)
        worst_eq = max(worst_eq, abs(ks - K(x)) / (1.0 + abs(K(x))))
        base = K(x) - k0
        for t in (0.5, 2.0):
            gap = abs(K(t * x) - k0 - t * t * base)
            worst_deg = max(worst_deg, gap / (1.0 + abs(base)))
    return HomogeneityReport(
        equal=bool(worst_eq <= tol),
        degree2=bool(worst_deg <= tol),
        max_conjugacy_gap=float(worst_eq),
        max_scaling_gap=float(worst_deg),
    )


def euler_degree_check(f: ScalarField, degree: float, tol: float = 1e-8,
                       samples: int = 200, seed: int = 0) -> bool:
    """Euler identity grad f(x).x = degree * f(x) at sampled points."""
    for x in f.domain.shrink(0.98).sample(samples, seed=seed):
        lhs = float(f.grad(x) @ x)
        rhs = degree * f(x)
        if abs(lhs - rhs) > tol * (1.0 + abs(f(x))):
            return False
    return True
