"""Connection coefficients and variational duality along trajectories.

Christoffel symbols of a metric are obtained from central differences of
the metric; for Hessian metrics they reduce to weighted third partials of
the generating function, and both routes are exposed so they can act as
cross-oracles.  The variational system of an input-affine system along a
nominal trajectory and its metric-dual are assembled as time-varying linear
systems; for reciprocal systems their input-output responses coincide and
p = G(x) delta_x is the state-space isomorphism between them.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.interpolate import CubicSpline

from .core import (
    AffineNonlinearSystem,
    DimensionMismatchError,
    MetricField,
    ScalarField,
    SignatureMatrix,
    as_matrix,
    as_vector,
)
from .dynamics import Trajectory

__all__ = [
    "Connection",
    "TimeVaryingLinearSystem",
    "VariationalMatchReport",
    "third_partial_tensor",
    "levi_civita",
    "hessian_christoffel",
    "christoffel_connection",
    "flatness_check",
    "variational_system",
    "dual_variational_system",
    "external_reciprocity_test",
    "default_probes",
    "simulate_ltv",
]

THIRD_PARTIAL_STEP = 1e-4
METRIC_STEP = 1e-5


@dataclass(frozen=True)
class Connection:
    """Christoffel coefficients x -> Gamma[k, i, j], symmetric in (i, j)."""

    dim: int
    gamma: Callable[[np.ndarray], np.ndarray]

    def __call__(self, x) -> np.ndarray:
        out = np.asarray(self.gamma(as_vector(x, self.dim)), dtype=float)
        if out.shape != (self.dim, self.dim, self.dim):
            raise DimensionMismatchError(f"connection array has shape {out.shape}")
        return out


def levi_civita(G: MetricField, x, step: float = METRIC_STEP) -> np.ndarray:
    """Levi-Civita coefficients of a metric by central differences.

    Gamma_{lij} = (dG_{li}/dx_j + dG_{lj}/dx_i - dG_{ij}/dx_l) / 2 raised by
    the inverse metric.  Torsion-free by construction.
    """
    xv = as_vector(x, G.dim)
    n = G.dim
    h = np.maximum(step, step * np.abs(xv))
    dG = np.empty((n, n, n))  # dG[i] = dG/dx_i
    for i in range(n):
        e = np.zeros(n)
        e[i] = h[i]
        dG[i] = (G(xv + e) - G(xv - e)) / (2 * h[i])
    lower = np.empty((n, n, n))  # lower[l, i, j]
    for l in range(n):
        for i in range(n):
            for j in range(n):
                lower[l, i, j] = 0.5 * (dG[j][l, i] + dG[i][l, j] - dG[l][i, j])
    Ginv = np.linalg.inv(G.checked(xv))
    return np.einsum("kl,lij->kij", Ginv, lower)


def third_partial_tensor(K: ScalarField, x, step: float = THIRD_PARTIAL_STEP) -> np.ndarray:
    """T[l, i, j] = d^3 K / dx_l dx_i dx_j by nested central differences.

    Differentiates the best available derivative level of K and symmetrizes
    over all index permutations.
    """
    xv = as_vector(x, K.dim)
    n = K.dim
    h = np.maximum(step, step * np.abs(xv))
    T = np.empty((n, n, n))
    for l in range(n):
        e = np.zeros(n)
        e[l] = h[l]
        T[l] = (K.hess(xv + e) - K.hess(xv - e)) / (2 * h[l])
    T = (T + T.transpose(1, 0, 2) + T.transpose(2, 1, 0)
         + T.transpose(0, 2, 1) + T.transpose(1, 2, 0) + T.transpose(2, 0, 1)) / 6.0
    return T


def hessian_christoffel(K: ScalarField, x, step: float = THIRD_PARTIAL_STEP) -> np.ndarray:
    """Christoffel coefficients of the Hessian metric of K.

    Gamma^k_{ij} = (1/2) sum_l [hess K(x)^-1]_{kl} d^3K/dx_l dx_i dx_j,
    using that the inverse Hessian equals the Hessian of the conjugate at
    the transformed point.
    """
    xv = as_vector(x, K.dim)
    T = third_partial_tensor(K, xv, step)
    Hinv = np.linalg.inv(K.hess(xv))
    return 0.5 * np.einsum("kl,lij->kij", Hinv, T)


def christoffel_connection(G: MetricField, step: float = METRIC_STEP) -> Connection:
    return Connection(G.dim, lambda x: levi_civita(G, x, step))


def hessian_connection(K: ScalarField, step: float = THIRD_PARTIAL_STEP) -> Connection:
    return Connection(K.dim, lambda x: hessian_christoffel(K, x, step))


def flatness_check(K: ScalarField, sample_points=None, tol: float = 1e-8,
                   n_samples: int = 30, seed: int = 0) -> bool:
    """True when all third partials of K vanish on the sampled domain.

    Cross-checked against the Christoffel coefficients themselves, which
    must vanish simultaneously; flat generating functions are exactly the
    quadratic-plus-affine ones.
    """
    if sample_points is None:
        sample_points = K.domain.shrink(0.9).sample(n_samples, seed=seed)
    worst_t = 0.0
    worst_g = 0.0
    for x in sample_points:
        worst_t = max(worst_t, float(np.max(np.abs(third_partial_tensor(K, x)))))
        worst_g = max(worst_g, float(np.max(np.abs(hessian_christoffel(K, x)))))
    return bool(worst_t <= tol and worst_g <= tol)


@dataclass(frozen=True)
class TimeVaryingLinearSystem:
    """Evaluators t -> A(t), B(t), C(t) for a linear time-varying system."""

    nx: int
    nu: int
    A: Callable[[float], np.ndarray]
    B: Callable[[float], np.ndarray]
    C: Callable[[float], np.ndarray]


def _state_interpolant(nominal: Trajectory):
    t = nominal.times
    if len(t) >= 4:
        return CubicSpline(t, nominal.states, axis=0)
    return lambda s: np.array([np.interp(s, t, nominal.states[:, i])
                               for i in range(nominal.states.shape[1])])


def _input_interpolant(nominal: Trajectory, u_signal):
    if u_signal is not None:
        return lambda s: as_vector(u_signal(s))
    t = nominal.times
    if nominal.inputs.shape[1] == 0:
        return lambda s: np.zeros(0)
    if len(t) >= 4:
        spline = CubicSpline(t, nominal.inputs, axis=0)
        return lambda s: np.asarray(spline(s), dtype=float)
    return lambda s: np.array([np.interp(s, t, nominal.inputs[:, i])
                               for i in range(nominal.inputs.shape[1])])


def variational_system(sys: AffineNonlinearSystem, nominal: Trajectory,
                       u_signal=None) -> TimeVaryingLinearSystem:
    """Linearization along a nominal trajectory.

    d/dt dx = (df/dx + sum_j u_j dg_j/dx) dx + g(x) du,   dy = (dh/dx) dx,
    with x(t), u(t) interpolated from the nominal trajectory (cubic spline)
    unless an explicit input signal is supplied.
    """
    xof = _state_interpolant(nominal)
    uof = _input_interpolant(nominal, u_signal)

    def A(t):
        x = as_vector(xof(t), sys.nx)
        u = as_vector(uof(t), sys.nu)
        return sys.jac_f(x) + np.einsum("j,jab->ab", u, sys.jac_g(x))

    def B(t):
        return as_matrix(sys.g(as_vector(xof(t), sys.nx)), (sys.nx, sys.nu))

    def C(t):
        return sys.jac_h(as_vector(xof(t), sys.nx))

    return TimeVaryingLinearSystem(sys.nx, sys.nu, A, B, C)


def dual_variational_system(sys: AffineNonlinearSystem, connection: Connection,
                            nominal: Trajectory, u_signal=None,
                            velocity_form: bool = False) -> TimeVaryingLinearSystem:
    """Metric-dual of the variational system along the same nominal.

    d/dt p_b = (df_a/dx_b + 2 Gamma^a_{bc} f_c) p_a
             + sum_j u_j (dg_{ja}/dx_b + 2 Gamma^a_{bc} g_{jc}) p_a
             + sum_j u^d_j dh_j/dx_b,
      y^d_j  = sum_a p_a g_{aj}.

    With velocity_form=True the connection terms are folded into a single
    2 Gamma^a_{bc} x_dot_c contribution; the two assemblies agree exactly.
    """
    if connection.dim != sys.nx:
        raise DimensionMismatchError("connection dimension must match state dimension")
    xof = _state_interpolant(nominal)
    uof = _input_interpolant(nominal, u_signal)

    def A(t):
        x = as_vector(xof(t), sys.nx)
        u = as_vector(uof(t), sys.nu)
        gam = connection(x)
        gmat = as_matrix(sys.g(x), (sys.nx, sys.nu))
        base = sys.jac_f(x).T + np.einsum("j,jab->ab", u, sys.jac_g(x)).T
        if velocity_form:
            xdot = as_vector(sys.f(x), sys.nx) + gmat @ u
            return base + 2.0 * np.einsum("abc,c->ba", gam, xdot)
        out = base + 2.0 * np.einsum("abc,c->ba", gam, as_vector(sys.f(x), sys.nx))
        for j in range(sys.nu):
            out = out + 2.0 * u[j] * np.einsum("abc,c->ba", gam, gmat[:, j])
        return out

    def B(t):
        return sys.jac_h(as_vector(xof(t), sys.nx)).T

    def C(t):
        return as_matrix(sys.g(as_vector(xof(t), sys.nx)), (sys.nx, sys.nu)).T

    return TimeVaryingLinearSystem(sys.nx, sys.nu, A, B, C)


def simulate_ltv(ltv: TimeVaryingLinearSystem, x0, u: Callable[[float], np.ndarray],
                 times: np.ndarray):
    """Implicit-midpoint integration of a linear time-varying system.

    Each step solves (I - h/2 A(tm)) x_{k+1} = (I + h/2 A(tm)) x_k + h B(tm) u(tm).
    Returns (states, outputs) sampled on the given time grid.
    """
    times = np.asarray(times, dtype=float)
    x = as_vector(x0, ltv.nx)
    states = [x.copy()]
    eye = np.eye(ltv.nx)
    for k in range(len(times) - 1):
        h = times[k + 1] - times[k]
        tm = times[k] + 0.5 * h
        Am = ltv.A(tm)
        rhs = (eye + 0.5 * h * Am) @ x + h * ltv.B(tm) @ as_vector(u(tm), ltv.nu)
        x = np.linalg.solve(eye - 0.5 * h * Am, rhs)
        states.append(x.copy())
    states = np.stack(states)
    outputs = np.stack([ltv.C(t) @ states[i] for i, t in enumerate(times)])
    return states, outputs


def default_probes(nu: int, t_span) -> list:
    """One-hot Gaussian pulses and sinusoids, one pair per input channel."""
    t0, t1 = float(t_span[0]), float(t_span[1])
    width = 0.08 * (t1 - t0)
    center = t0 + 0.25 * (t1 - t0)
    omega = 2.0 * np.pi / (t1 - t0)
    probes = []
    for j in range(nu):
        e = np.zeros(nu)
        e[j] = 1.0
        probes.append(lambda t, e=e: e * np.exp(-((t - center) / width) ** 2))
        probes.append(lambda t, e=e: e * np.sin(omega * (t - t0)))
    return probes


@dataclass(frozen=True)
class VariationalMatchReport:
    match: bool
    max_output_gap: float
    max_state_gap: float
    probes: int
    per_probe: tuple


def external_reciprocity_test(sys: AffineNonlinearSystem, G: MetricField,
                              nominal: Trajectory, probe_inputs=None,
                              tol: float = 1e-6, delta_x0=None, u_signal=None,
                              connection: Optional[Connection] = None,
                              sigma: Optional[SignatureMatrix] = None) -> VariationalMatchReport:
    """Input-output comparison of the variational system and its metric dual.

    For each probe du the variational system starts at delta_x(0) = xi and
    the dual at p(0) = G(x(0)) xi with sigma du as its input; the dual output
    matching sigma dy (and p(t) = G(x(t)) delta_x(t) along the way) witnesses
    external reciprocity of the nonlinear system along the nominal.
    """
    conn = connection if connection is not None else christoffel_connection(G)
    var = variational_system(sys, nominal, u_signal)
    dual = dual_variational_system(sys, conn, nominal, u_signal)
    times = nominal.times
    xi = np.zeros(sys.nx) if delta_x0 is None else as_vector(delta_x0, sys.nx)
    x_start = nominal.states[0]
    probes = probe_inputs if probe_inputs is not None else default_probes(
        sys.nu, (times[0], times[-1]))
    sig = sigma if sigma is not None else SignatureMatrix.identity(sys.nu)

    xof = _state_interpolant(nominal)
    max_gap = 0.0
    max_state = 0.0
    rows = []
    for probe in probes:
        dst, dy = simulate_ltv(var, xi, probe, times)
        pst, yd = simulate_ltv(dual, G(x_start) @ xi,
                               lambda t, probe=probe: sig.apply(probe(t)), times)
        dy = sig.conjugate_rows(dy.T).T if dy.size else dy
        gap = float(np.max(np.abs(dy - yd))) if dy.size else 0.0
        iso = 0.0
        for i, t in enumerate(times):
            Gx = G(as_vector(xof(t), sys.nx))
            iso = max(iso, float(np.max(np.abs(pst[i] - Gx @ dst[i]))))
        max_gap = max(max_gap, gap)
        max_state = max(max_state, iso)
        rows.append({"times": times, "dy": dy, "yd": yd, "gap": gap, "state_gap": iso})
    return VariationalMatchReport(
        match=bool(max_gap <= tol), max_output_gap=max_gap,
        max_state_gap=max_state, probes=len(probes), per_probe=tuple(rows))
