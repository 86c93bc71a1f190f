"""Simulation and certification of pseudo-gradient and port-Hamiltonian systems.

The integrator is implicit midpoint with a Newton inner solve that assembles
the state-dependent mass matrix at the midpoint, so trajectories of
G(x) x_dot = -dV/dx are produced without ever forming G^-1 explicitly.
Trajectory-level monitors check dissipation inequalities; structural
converters move between the port-Hamiltonian and Hessian pseudo-gradient
representations through Legendre transforms of the split Hamiltonian.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .core import (
    AssumptionError,
    BoxDomain,
    ConvergenceError,
    DimensionMismatchError,
    DomainError,
    MetricField,
    RecipkitError,
    ScalarField,
    SignatureMatrix,
    as_matrix,
    as_vector,
    finite_difference_jacobian,
    symmetry_residual,
)
from .legendre import LegendrePair, euler_degree_check, make_legendre_pair

__all__ = [
    "Trajectory",
    "HessianPseudoGradientSystem",
    "GeneralPseudoGradientSystem",
    "PortHamiltonianSystem",
    "ZSpaceSystem",
    "ConversionSplit",
    "ConversionResult",
    "DissipationReport",
    "RelaxationCertificate",
    "MonotoneClassification",
    "NotRelaxationError",
    "affine_input_potential",
    "integrate_implicit_midpoint",
    "simulate_pseudo_gradient",
    "simulate_port_hamiltonian",
    "dissipation_monitor",
    "ph_to_hessian_pseudo_gradient",
    "check_passive_hessian_structure",
    "certify_relaxation",
    "classify_monotone_ph",
    "incremental_passivity_check",
    "compatibility_identity_gaps",
]


class NotRelaxationError(RecipkitError):
    """The generating function fails positive definiteness on the domain."""


@dataclass(frozen=True)
class Trajectory:
    """Sampled trajectory with named monitor channels."""

    times: np.ndarray
    states: np.ndarray
    inputs: np.ndarray
    outputs: np.ndarray
    monitors: dict = field(default_factory=dict)

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        x = np.atleast_2d(np.asarray(self.states, dtype=float))
        u = np.atleast_2d(np.asarray(self.inputs, dtype=float))
        y = np.atleast_2d(np.asarray(self.outputs, dtype=float))
        if not (len(t) == x.shape[0] == u.shape[0] == y.shape[0]):
            raise DimensionMismatchError("trajectory channels have mismatched lengths")
        if len(t) > 1 and not np.all(np.diff(t) > 0):
            raise DimensionMismatchError("trajectory times must be strictly increasing")
        for name, ch in self.monitors.items():
            if len(np.asarray(ch)) != len(t):
                raise DimensionMismatchError(f"monitor {name} has wrong length")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "states", x)
        object.__setattr__(self, "inputs", u)
        object.__setattr__(self, "outputs", y)

    def to_csv(self, path):
        """Write t, x_1..x_n, u_1..u_m, y_1..y_m, then monitor columns."""
        names = [k for k in ("S", "supply") if k in self.monitors]
        names += sorted(k for k in self.monitors if k not in ("S", "supply"))
        header = (["t"]
                  + [f"x_{i+1}" for i in range(self.states.shape[1])]
                  + [f"u_{i+1}" for i in range(self.inputs.shape[1])]
                  + [f"y_{i+1}" for i in range(self.outputs.shape[1])]
                  + names)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            for i in range(len(self.times)):
                row = [repr(float(self.times[i]))]
                row += [repr(float(v)) for v in self.states[i]]
                row += [repr(float(v)) for v in self.inputs[i]]
                row += [repr(float(v)) for v in self.outputs[i]]
                row += [repr(float(np.asarray(self.monitors[k])[i])) for k in names]
                w.writerow(row)


def integrate_implicit_midpoint(rhs: Callable, x0, t_span, step: float,
                                mass: Optional[Callable] = None,
                                rhs_jac: Optional[Callable] = None,
                                newton_tol: float = 1e-11, max_newton: int = 40,
                                local_tol: Optional[float] = None,
                                domain: Optional[BoxDomain] = None):
    """Implicit midpoint for mass(x) x_dot = rhs(t, x).

    Each step solves M(m)(x+ - x) = h rhs(tm, m) with m = (x + x+)/2 by a
    damped Newton iteration; the Jacobian uses M(m) - (h/2) d rhs/dx and a
    finite-difference fallback.  With local_tol set, every step is compared
    against two half steps and subdivided until the discrepancy falls below
    the tolerance (the half-step result is kept).

    Returns (times, states) on the uniform macro grid.
    """
    t0, t1 = float(t_span[0]), float(t_span[1])
    if step <= 0 or t1 <= t0:
        raise DimensionMismatchError("need positive step and forward time span")
    x = as_vector(x0)
    n = x.shape[0]
    eye = np.eye(n)

    def mass_at(v):
        return eye if mass is None else as_matrix(mass(v), (n, n))

    def jac_rhs(t, v):
        if rhs_jac is not None:
            return as_matrix(rhs_jac(t, v), (n, n))
        return finite_difference_jacobian(lambda w: rhs(t, w), v)

    def single_step(t, xk, h):
        tm = t + 0.5 * h
        # predictor: explicit Euler through the mass matrix
        try:
            v = np.linalg.solve(mass_at(xk), as_vector(rhs(t, xk), n))
        except np.linalg.LinAlgError as exc:
            raise ConvergenceError(f"singular mass matrix at t={t:.6g}") from exc
        w = xk + h * v
        scale = newton_tol * (1.0 + float(np.linalg.norm(xk)))
        r = None
        for _ in range(max_newton):
            m = 0.5 * (xk + w)
            r = mass_at(m) @ (w - xk) - h * as_vector(rhs(tm, m), n)
            rn = float(np.linalg.norm(r))
            if rn <= scale:
                return w
            J = mass_at(m) - 0.5 * h * jac_rhs(tm, m)
            try:
                delta = np.linalg.solve(J, r)
            except np.linalg.LinAlgError as exc:
                raise ConvergenceError(f"singular Newton matrix at t={t:.6g}") from exc
            lam = 1.0
            while lam >= 1.0 / 64.0:
                cand = w - lam * delta
                mc = 0.5 * (xk + cand)
                rc = mass_at(mc) @ (cand - xk) - h * as_vector(rhs(tm, mc), n)
                if float(np.linalg.norm(rc)) < rn or float(np.linalg.norm(rc)) <= scale:
                    w = cand
                    break
                lam *= 0.5
            else:
                raise ConvergenceError(f"Newton damping stalled at t={t:.6g}")
        raise ConvergenceError(f"implicit midpoint Newton failed to converge at t={t:.6g}")

    def refined_step(t, xk, h, depth=14):
        if local_tol is None:
            return single_step(t, xk, h)
        full = single_step(t, xk, h)
        mid = single_step(t, xk, 0.5 * h)
        half = single_step(t + 0.5 * h, mid, 0.5 * h)
        if float(np.max(np.abs(full - half))) <= local_tol or depth == 0:
            return half
        a = refined_step(t, xk, 0.5 * h, depth - 1)
        return refined_step(t + 0.5 * h, a, 0.5 * h, depth - 1)

    n_steps = max(1, int(round((t1 - t0) / step)))
    times = t0 + (t1 - t0) * np.arange(n_steps + 1) / n_steps
    states = [x.copy()]
    for k in range(n_steps):
        x = refined_step(times[k], x, times[k + 1] - times[k])
        if domain is not None and not domain.contains(x):
            raise DomainError(f"trajectory left the state box at t={times[k+1]:.6g}: x={x}")
        states.append(x.copy())
    return times, np.stack(states)


def affine_input_potential(P: ScalarField, g, u_box: BoxDomain) -> ScalarField:
    """Joint potential V(x, u) = P(x) - x^T g u with analytic derivatives."""
    gm = as_matrix(g)
    nx, nu = gm.shape
    if P.dim != nx or u_box.dim != nu:
        raise DimensionMismatchError("P/g/u_box dimensions are inconsistent")

    def value(w):
        x, u = w[:nx], w[nx:]
        return P(x) - float(x @ gm @ u)

    def gradient(w):
        x, u = w[:nx], w[nx:]
        return np.concatenate([P.grad(x) - gm @ u, -(gm.T @ x)])

    def hessian(w):
        x = w[:nx]
        top = np.hstack([P.hess(x), -gm])
        bot = np.hstack([-gm.T, np.zeros((nu, nu))])
        return np.vstack([top, bot])

    return ScalarField(nx + nu, value, BoxDomain.product(P.domain, u_box),
                       gradient=gradient, hessian=hessian)


class _PotentialOps:
    """Shared accessors for systems driven by a joint potential V(x, u)."""

    @property
    def nu(self) -> int:
        return self.sigma.m

    def split_grad(self, x, u):
        w = np.concatenate([as_vector(x, self.nx), as_vector(u, self.nu)])
        grad = self.V.grad(w)
        return grad[:self.nx], grad[self.nx:]

    def V_x(self, x, u):
        return self.split_grad(x, u)[0]

    def V_u(self, x, u):
        return self.split_grad(x, u)[1]

    def V_xx(self, x, u):
        w = np.concatenate([as_vector(x, self.nx), as_vector(u, self.nu)])
        return self.V.hess(w)[:self.nx, :self.nx]

    def joint_hessian(self, x, u):
        w = np.concatenate([as_vector(x, self.nx), as_vector(u, self.nu)])
        return self.V.hess(w)

    def output(self, x, u):
        # sigma y = -dV/du
        return self.sigma.apply(-self.V_u(x, u))


@dataclass(frozen=True)
class HessianPseudoGradientSystem(_PotentialOps):
    """hess K(x) x_dot = -dV/dx(x, u), sigma y = -dV/du(x, u)."""

    K: ScalarField
    V: ScalarField
    sigma: SignatureMatrix
    P: Optional[ScalarField] = None
    g: Optional[np.ndarray] = None
    storage: Optional[ScalarField] = None

    def __post_init__(self):
        if self.V.dim != self.K.dim + self.sigma.m:
            raise DimensionMismatchError(
                f"V lives on dim {self.V.dim}, expected {self.K.dim}+{self.sigma.m}")
        if self.g is not None:
            object.__setattr__(self, "g", as_matrix(self.g, (self.K.dim, self.sigma.m)))

    @property
    def nx(self) -> int:
        return self.K.dim

    @property
    def domain(self) -> BoxDomain:
        return self.K.domain

    def metric(self, x) -> np.ndarray:
        return self.K.hess(x)

    @staticmethod
    def from_internal_potential(K: ScalarField, P: ScalarField, g,
                                sigma: SignatureMatrix,
                                u_box: Optional[BoxDomain] = None,
                                storage: Optional[ScalarField] = None
                                ) -> "HessianPseudoGradientSystem":
        gm = as_matrix(g, (K.dim, sigma.m))
        if u_box is None:
            u_box = BoxDomain.cube(sigma.m, 1.0)
        V = affine_input_potential(P, gm, u_box)
        return HessianPseudoGradientSystem(K=K, V=V, sigma=sigma, P=P, g=gm,
                                           storage=storage)


@dataclass(frozen=True)
class GeneralPseudoGradientSystem(_PotentialOps):
    """G(x) x_dot = -dV/dx(x, u) for a metric that need not be a Hessian."""

    G: MetricField
    V: ScalarField
    sigma: SignatureMatrix
    P: Optional[ScalarField] = None
    g: Optional[np.ndarray] = None
    storage: Optional[ScalarField] = None

    def __post_init__(self):
        if self.V.dim != self.G.dim + self.sigma.m:
            raise DimensionMismatchError("V dimension mismatch")

    @property
    def nx(self) -> int:
        return self.G.dim

    @property
    def domain(self) -> BoxDomain:
        return self.G.domain

    def metric(self, x) -> np.ndarray:
        return self.G(x)


@dataclass(frozen=True)
class PortHamiltonianSystem:
    """z_dot = J(z) grad H(z) - R(grad H(z)) + g(z) u, y = g(z)^T grad H(z).

    J may be a constant matrix or a callable; R maps the co-state
    x = grad H(z) to a vector with x . R(x) >= 0; g is a constant input
    matrix or a callable.
    """

    H: ScalarField
    J: object
    g: object
    nu: int
    R: Optional[Callable] = None
    R_jac: Optional[Callable] = None

    @property
    def n(self) -> int:
        return self.H.dim

    @property
    def domain(self) -> BoxDomain:
        return self.H.domain

    def J_at(self, z) -> np.ndarray:
        J = self.J(z) if callable(self.J) else self.J
        return as_matrix(J, (self.n, self.n))

    def g_at(self, z) -> np.ndarray:
        g = self.g(z) if callable(self.g) else self.g
        return as_matrix(g, (self.n, self.nu))

    def R_at(self, x) -> np.ndarray:
        if self.R is None:
            return np.zeros(self.n)
        return as_vector(self.R(x), self.n)

    def rhs(self, z, u):
        grad = self.H.grad(z)
        return self.J_at(z) @ grad - self.R_at(grad) + self.g_at(z) @ as_vector(u, self.nu)

    def rhs_jac(self, z, u):
        """Analytic state Jacobian when J, g are constant and R_jac is known."""
        if callable(self.J) or callable(self.g):
            return None
        grad = self.H.grad(z)
        hess = self.H.hess(z)
        Rj = self.R_jac(grad) if self.R_jac is not None else (
            np.zeros((self.n, self.n)) if self.R is None else None)
        if Rj is None:
            return None
        return (as_matrix(self.J, (self.n, self.n)) - as_matrix(Rj, (self.n, self.n))) @ hess

    def output(self, z, u):
        return self.g_at(z).T @ self.H.grad(z)

    def validate(self, n_samples: int = 20, seed: int = 0, tol: float = 1e-10):
        """Sampled skewness of J and nonnegativity of the dissipation pairing."""
        worst_skew = 0.0
        worst_diss = 0.0
        for z in self.domain.shrink(0.9).sample(n_samples, seed=seed):
            Jz = self.J_at(z)
            worst_skew = max(worst_skew, float(np.max(np.abs(Jz + Jz.T))))
            x = self.H.grad(z)
            worst_diss = min(worst_diss, float(x @ self.R_at(x)))
        if worst_skew > tol:
            raise AssumptionError("J-skew", f"max |J + J^T| = {worst_skew:.3e}")
        if worst_diss < -1e-10:
            raise AssumptionError("R-dissipation", f"x.R(x) as low as {worst_diss:.3e}")
        return {"max_skew": worst_skew, "min_dissipation_pairing": worst_diss}


def _record(sys_output, states, times, u_signal, nu, storage):
    inputs = np.stack([as_vector(u_signal(t), nu) if nu else np.zeros(0) for t in times])
    outputs = np.stack([as_vector(sys_output(states[i], inputs[i]), nu) if nu else np.zeros(0)
                        for i in range(len(times))])
    monitors = {"supply": np.array([float(inputs[i] @ outputs[i]) for i in range(len(times))])}
    if storage is not None:
        monitors["S"] = np.array([storage(states[i]) for i in range(len(times))])
    return inputs, outputs, monitors


def simulate_pseudo_gradient(sys, x0, u_signal: Callable, t_span, step: float,
                             newton_tol: float = 1e-11,
                             local_tol: Optional[float] = None,
                             enforce_domain: bool = True,
                             storage: Optional[ScalarField] = None) -> Trajectory:
    """Simulate a (Hessian) pseudo-gradient system with implicit midpoint.

    The mass matrix is the metric assembled at the Newton midpoint.  The
    returned trajectory always carries the supply-rate monitor u.y and, when
    a storage field is attached to the system or passed here, the channel S.
    """
    nu = sys.nu

    def rhs(t, x):
        return -sys.V_x(x, as_vector(u_signal(t), nu))

    def rhs_jac(t, x):
        return -sys.V_xx(x, as_vector(u_signal(t), nu))

    times, states = integrate_implicit_midpoint(
        rhs, x0, t_span, step, mass=sys.metric, rhs_jac=rhs_jac,
        newton_tol=newton_tol, local_tol=local_tol,
        domain=sys.domain if enforce_domain else None)
    S = storage if storage is not None else getattr(sys, "storage", None)
    inputs, outputs, monitors = _record(sys.output, states, times, u_signal, nu, S)
    return Trajectory(times, states, inputs, outputs, monitors)


def simulate_port_hamiltonian(sys: PortHamiltonianSystem, z0, u_signal: Callable,
                              t_span, step: float, newton_tol: float = 1e-11,
                              local_tol: Optional[float] = None,
                              enforce_domain: bool = True) -> Trajectory:
    """Simulate a port-Hamiltonian system; monitor S is the Hamiltonian."""
    nu = sys.nu

    def rhs(t, z):
        return sys.rhs(z, u_signal(t))

    def rhs_jac(t, z):
        J = sys.rhs_jac(z, u_signal(t))
        if J is None:
            return finite_difference_jacobian(lambda w: sys.rhs(w, u_signal(t)), z)
        return J

    times, states = integrate_implicit_midpoint(
        rhs, z0, t_span, step, mass=None, rhs_jac=rhs_jac, newton_tol=newton_tol,
        local_tol=local_tol, domain=sys.domain if enforce_domain else None)
    inputs, outputs, monitors = _record(sys.output, states, times, u_signal, nu, sys.H)
    return Trajectory(times, states, inputs, outputs, monitors)


@dataclass(frozen=True)
class DissipationReport:
    max_violation: float
    passive_along: bool
    supply_scale: float
    steps: int


def dissipation_monitor(traj: Trajectory, S: Optional[ScalarField] = None,
                        tol: float = 1e-8) -> DissipationReport:
    """Per-step dissipation inequality S(x_{k+1}) - S(x_k) <= trapezoid(u.y) + tol dt.

    The supply integral uses the trapezoid rule on the recorded supply-rate
    channel.  supply_scale reports max(1, |cumulative supply|, |S - S(0)|)
    for use in relative acceptance thresholds.
    """
    if S is not None:
        svals = np.array([S(x) for x in traj.states])
    elif "S" in traj.monitors:
        svals = np.asarray(traj.monitors["S"], dtype=float)
    else:
        raise DimensionMismatchError("no storage available: pass S or record monitor 'S'")
    rate = np.array([float(traj.inputs[i] @ traj.outputs[i]) for i in range(len(traj.times))])
    dt = np.diff(traj.times)
    supply = 0.5 * (rate[:-1] + rate[1:]) * dt
    ds = np.diff(svals)
    violations = ds - supply
    max_violation = float(np.max(violations)) if len(violations) else 0.0
    passive = bool(np.all(violations <= tol * dt))
    cum = np.concatenate([[0.0], np.cumsum(supply)])
    scale = max(1.0, float(np.max(np.abs(cum))), float(np.max(np.abs(svals - svals[0]))))
    return DissipationReport(max_violation=max_violation, passive_along=passive,
                             supply_scale=scale, steps=len(violations))


@dataclass(frozen=True)
class ConversionSplit:
    """Coordinate split and potentials for the conversion to pseudo-gradient form.

    idx1/idx2 index the two state blocks inside z; H1/H2 are the additive
    Hamiltonian blocks, P1/P2 the Rayleigh potentials generating the
    dissipation (R1 = dP1/dx1, R2 = -dP2/dx2), Pc the constant coupling and
    g1 the input matrix acting on the first block.
    """

    idx1: tuple
    idx2: tuple
    H1: ScalarField
    H2: ScalarField
    P1: ScalarField
    P2: ScalarField
    Pc: np.ndarray
    g1: np.ndarray


@dataclass(frozen=True)
class ConversionResult:
    system: HessianPseudoGradientSystem
    storage: ScalarField
    report: dict
    split: ConversionSplit


def ph_to_hessian_pseudo_gradient(sys: PortHamiltonianSystem, split: ConversionSplit,
                                  n_samples: int = 40, seed: int = 0,
                                  tol: float = 1e-8,
                                  u_box: Optional[BoxDomain] = None) -> ConversionResult:
    """Convert a structured port-Hamiltonian system to Hessian pseudo-gradient form.

    Checks, at sampled points, the four structural assumptions:

    I    J and g are constant with J = [[0, -Pc], [Pc^T, 0]] and g = [g1; 0]
         in the split ordering;
    II   the Hamiltonian splits additively across the two blocks;
    III  the dissipation derives from the Rayleigh potentials;
    IV   the Hamiltonian blocks are bounded below (sampled minima only).

    On success the co-energy system has generating function
    K(x) = H1*(x1) - H2*(x2), mixed potential P1 + P2 + x1.Pc x2 and storage
    H1(grad H1*(x1)) + H2(grad H2*(x2)).  Raises AssumptionError naming the
    first failed assumption.
    """
    i1 = tuple(int(i) for i in split.idx1)
    i2 = tuple(int(i) for i in split.idx2)
    if sorted(i1 + i2) != list(range(sys.n)):
        raise DimensionMismatchError("idx1 and idx2 must partition the state indices")
    k1, k2 = len(i1), len(i2)
    Pc = as_matrix(split.Pc, (k1, k2))
    g1 = as_matrix(split.g1, (k1, sys.nu))
    report: dict = {}

    zs = sys.domain.shrink(0.9).sample(n_samples, seed=seed)
    perm = np.array(i1 + i2)

    # assumption I: constant structured J and g
    Jexp = np.zeros((sys.n, sys.n))
    Jexp[:k1, k1:] = -Pc
    Jexp[k1:, :k1] = Pc.T
    gexp = np.vstack([g1, np.zeros((k2, sys.nu))])
    worst_J = worst_g = 0.0
    for z in zs:
        Jp = sys.J_at(z)[np.ix_(perm, perm)]
        worst_J = max(worst_J, float(np.max(np.abs(Jp - Jexp))))
        gp = sys.g_at(z)[perm, :]
        worst_g = max(worst_g, float(np.max(np.abs(gp - gexp))))
    report["I_structure_gap"] = max(worst_J, worst_g)
    if report["I_structure_gap"] > tol:
        raise AssumptionError("I", f"J/g structure gap {report['I_structure_gap']:.3e}",
                              report)

    # assumption II: additive Hamiltonian split (up to a constant offset)
    offset = None
    worst_split = 0.0
    for z in zs:
        gap = sys.H(z) - split.H1(z[perm][:k1]) - split.H2(z[perm][k1:])
        if offset is None:
            offset = gap
        worst_split = max(worst_split, abs(gap - offset))
    report["II_additive_gap"] = worst_split
    if worst_split > tol * (1.0 + abs(offset or 0.0)):
        raise AssumptionError("II", f"Hamiltonian split gap {worst_split:.3e}", report)

    # assumption III: Rayleigh dissipation in the co-state variables
    xdom = BoxDomain.product(split.P1.domain, split.P2.domain)
    worst_ray = 0.0
    for w in xdom.shrink(0.9).sample(n_samples, seed=seed + 1):
        x1, x2 = w[:k1], w[k1:]
        x_full = np.zeros(sys.n)
        x_full[perm[:k1]] = x1
        x_full[perm[k1:]] = x2
        R = sys.R_at(x_full)
        expected1 = split.P1.grad(x1)
        expected2 = -split.P2.grad(x2)
        gap = max(float(np.max(np.abs(R[perm[:k1]] - expected1))) if k1 else 0.0,
                  float(np.max(np.abs(R[perm[k1:]] - expected2))) if k2 else 0.0)
        worst_ray = max(worst_ray, gap)
    report["III_rayleigh_gap"] = worst_ray
    if worst_ray > tol:
        raise AssumptionError("III", f"Rayleigh structure gap {worst_ray:.3e}", report)

    # assumption IV: sampled lower bounds (a caveat, not a proof)
    report["IV_sampled_min_H1"] = float(min(split.H1(z) for z in split.H1.domain.sample(64, seed)))
    report["IV_sampled_min_H2"] = float(min(split.H2(z) for z in split.H2.domain.sample(64, seed)))

    pair1 = make_legendre_pair(split.H1, verify=False)
    pair2 = make_legendre_pair(split.H2, verify=False)
    xbox = BoxDomain.product(pair1.Kstar.domain, pair2.Kstar.domain)

    def k_value(x):
        return pair1.Kstar(x[:k1]) - pair2.Kstar(x[k1:])

    def k_grad(x):
        return np.concatenate([pair1.Kstar.grad(x[:k1]), -pair2.Kstar.grad(x[k1:])])

    def k_hess(x):
        H = np.zeros((k1 + k2, k1 + k2))
        H[:k1, :k1] = pair1.Kstar.hess(x[:k1])
        H[k1:, k1:] = -pair2.Kstar.hess(x[k1:])
        return H

    K = ScalarField(k1 + k2, k_value, xbox, gradient=k_grad, hessian=k_hess)

    def p_value(x):
        return split.P1(x[:k1]) + split.P2(x[k1:]) + float(x[:k1] @ Pc @ x[k1:])

    def p_grad(x):
        return np.concatenate([split.P1.grad(x[:k1]) + Pc @ x[k1:],
                               split.P2.grad(x[k1:]) + Pc.T @ x[:k1]])

    def p_hess(x):
        top = np.hstack([split.P1.hess(x[:k1]), Pc])
        bot = np.hstack([Pc.T, split.P2.hess(x[k1:])])
        return np.vstack([top, bot])

    Pfield = ScalarField(k1 + k2, p_value, xbox, gradient=p_grad, hessian=p_hess)

    def storage_value(x):
        return split.H1(pair1.inverse(x[:k1])) + split.H2(pair2.inverse(x[k1:]))

    def storage_grad(x):
        # grad of H_i(grad H_i*(.)) is hess H_i* times the argument
        return np.concatenate([pair1.Kstar.hess(x[:k1]) @ x[:k1],
                               pair2.Kstar.hess(x[k1:]) @ x[k1:]])

    storage = ScalarField(k1 + k2, storage_value, xbox, gradient=storage_grad)

    g_full = np.vstack([g1, np.zeros((k2, sys.nu))])
    system = HessianPseudoGradientSystem.from_internal_potential(
        K, Pfield, g_full, SignatureMatrix.identity(sys.nu), u_box=u_box,
        storage=storage)
    return ConversionResult(system=system, storage=storage, report=report,
                            split=ConversionSplit(i1, i2, split.H1, split.H2,
                                                  split.P1, split.P2, Pc, g1))


def check_passive_hessian_structure(sys: HessianPseudoGradientSystem,
                                    S1: ScalarField, S2: ScalarField,
                                    tol: float = 1e-8, n_samples: int = 60,
                                    seed: int = 0) -> dict:
    """Structural consequences of passivity for a split K = S1(x1) - S2(x2).

    With storage S1 + S2 the input matrix must not act on the second block,
    the first mixed-potential block must be accretive on the x2 = 0 slice
    and the second dissipative on the x1 = 0 slice.
    """
    k = S1.dim
    if S1.dim + S2.dim != sys.nx:
        raise DimensionMismatchError("S1/S2 dims must sum to the state dimension")
    if sys.P is None or sys.g is None:
        raise DimensionMismatchError("structure check needs the (P, g) potential form")

    worst_split = 0.0
    offset = None
    for x in sys.K.domain.shrink(0.9).sample(n_samples, seed=seed):
        gap = sys.K(x) - (S1(x[:k]) - S2(x[k:]))
        if offset is None:
            offset = gap
        worst_split = max(worst_split, abs(gap - offset))
    split_ok = worst_split <= tol * (1.0 + abs(offset or 0.0))

    g2 = sys.g[k:, :]
    g2_zero = bool(g2.size == 0 or float(np.max(np.abs(g2))) <= 1e-12)

    worst1 = np.inf
    for x1 in S1.domain.shrink(0.9).sample(n_samples, seed=seed + 1):
        x = np.concatenate([x1, np.zeros(sys.nx - k)])
        worst1 = min(worst1, float(x1 @ sys.P.grad(x)[:k]))
    worst2 = -np.inf
    for x2 in S2.domain.shrink(0.9).sample(n_samples, seed=seed + 2):
        x = np.concatenate([np.zeros(k), x2])
        worst2 = max(worst2, float(x2 @ sys.P.grad(x)[k:]))

    return {
        "split_ok": bool(split_ok),
        "split_gap": float(worst_split),
        "g2_zero": g2_zero,
        "block1_accretive": bool(worst1 >= -tol),
        "block2_dissipative": bool(worst2 <= tol),
        "min_block1_pairing": float(worst1),
        "max_block2_pairing": float(worst2),
    }


@dataclass(frozen=True)
class RelaxationCertificate:
    relaxation: bool
    mode: str
    min_metric_eigenvalue: float
    worst_inequality: float
    storage: Optional[ScalarField]
    storage_floor_ok: Optional[bool]
    details: dict


def _conjugate_storage(K: ScalarField) -> ScalarField:
    """S(x) = K*(grad K(x)) = x.grad K(x) - K(x), with analytic gradient."""
    return ScalarField(
        K.dim,
        lambda x: float(x @ K.grad(x)) - K(x),
        K.domain,
        gradient=lambda x: K.hess(x) @ x,
    )


def certify_relaxation(sys: HessianPseudoGradientSystem, sample_points=None,
                       tol: float = 1e-9, u_box: Optional[BoxDomain] = None,
                       n_samples: int = 200, seed: int = 0,
                       pd_floor: float = 1e-10) -> RelaxationCertificate:
    """Certify relaxation structure of a Hessian pseudo-gradient system.

    Requires a definite sign pattern: with sigma = +I the sampled inequality
    is x.dV/dx - u.dV/du >= 0, with sigma = -I it is x.dV/dx + u.dV/du >= 0.
    For the internal form V = P(x) - x^T g u (sigma = +I) the specialized
    conditions are used instead: x.grad P(x) >= 0 and degree-1 homogeneity
    of the input couplings.  On success the storage K*(grad K) is returned
    and its floor at the origin is verified on the sampled set.
    """
    if sys.sigma.is_identity:
        mode = "+I"
    elif bool(np.all(sys.sigma.signs == -1)):
        mode = "-I"
    else:
        raise DimensionMismatchError("relaxation certification needs sigma = +I or sigma = -I")

    xs = sys.K.domain.shrink(0.95).sample(n_samples, seed=seed)
    min_eig = np.inf
    for x in xs:
        w = float(np.linalg.eigvalsh(sys.K.hess(x)).min())
        min_eig = min(min_eig, w)
        if w <= pd_floor:
            raise NotRelaxationError(
                f"hess K has eigenvalue {w:.3e} <= {pd_floor} at x={x}; "
                "not a relaxation candidate")

    details: dict = {"points": len(xs)}
    worst = np.inf
    if mode == "+I" and sys.P is not None and sys.g is not None:
        for x in xs:
            worst = min(worst, float(x @ sys.P.grad(x)))
        degree_one = True
        for j in range(sys.nu):
            gj = sys.g[:, j]
            cj = ScalarField(sys.nx, lambda x, gj=gj: float(gj @ x), sys.K.domain,
                             gradient=lambda x, gj=gj: gj)
            degree_one = degree_one and euler_degree_check(cj, 1.0, tol=1e-10,
                                                           samples=32, seed=seed)
        details["input_couplings_degree_one"] = degree_one
        ok = worst >= -tol and degree_one
    else:
        if sample_points is not None:
            pts = sample_points
        else:
            ub = u_box if u_box is not None else BoxDomain.cube(sys.nu, 1.0)
            prod = BoxDomain.product(sys.K.domain.shrink(0.95), ub)
            raw = prod.sample(n_samples, seed=seed)
            pts = [(p[:sys.nx], p[sys.nx:]) for p in raw]
        sign = 1.0 if mode == "-I" else -1.0
        for x, u in pts:
            vx, vu = sys.split_grad(x, u)
            val = float(x @ vx) + sign * float(np.asarray(u) @ vu)
            worst = min(worst, val)
        details["points"] = len(pts)
        ok = worst >= -tol

    storage = None
    floor_ok = None
    if ok:
        storage = _conjugate_storage(sys.K)
        if sys.K.domain.contains(np.zeros(sys.nx)):
            s0 = storage(np.zeros(sys.nx))
            floor_ok = all(storage(x) >= s0 - 1e-10 for x in xs)
        details["storage_is_conjugate_pullback"] = True
    return RelaxationCertificate(
        relaxation=bool(ok), mode=mode, min_metric_eigenvalue=float(min_eig),
        worst_inequality=float(worst), storage=storage, storage_floor_ok=floor_ok,
        details=details)


@dataclass(frozen=True)
class ZSpaceSystem:
    """Co-state form z_dot = -dV/dx(grad K*(z), u), sigma y = -dV/du(grad K*(z), u)."""

    base: object
    pair: LegendrePair

    @property
    def n(self) -> int:
        return self.base.nx

    @property
    def nu(self) -> int:
        return self.base.nu

    def x_of(self, z):
        return self.pair.inverse(z)

    def z_of(self, x):
        return self.pair.forward(x)

    def rhs(self, z, u):
        return -self.base.V_x(self.x_of(z), u)

    def output(self, z, u):
        x = self.x_of(z)
        return self.base.sigma.apply(-self.base.V_u(x, u))

    def simulate(self, z0, u_signal, t_span, step, **kw) -> Trajectory:
        def rhs(t, z):
            return self.rhs(z, u_signal(t))

        times, states = integrate_implicit_midpoint(rhs, z0, t_span, step, **kw)
        inputs, outputs, monitors = _record(self.output, states, times, u_signal,
                                            self.nu, None)
        return Trajectory(times, states, inputs, outputs, monitors)


@dataclass(frozen=True)
class MonotoneClassification:
    cyclically_monotone: bool
    monotone: bool
    min_joint_eigenvalue: float
    min_state_block_eigenvalue: float
    max_input_block_eigenvalue: float
    z_system: ZSpaceSystem


def classify_monotone_ph(sys: HessianPseudoGradientSystem, sample_points=None,
                         u_box: Optional[BoxDomain] = None, n_samples: int = 100,
                         seed: int = 0, tol: float = 1e-9) -> MonotoneClassification:
    """Classify the induced port-Hamiltonian relation by convexity of V.

    Joint convexity of V (with sigma = -I) gives a maximal cyclically
    monotone structure; convexity in x together with concavity in u (with
    sigma = +I) gives a maximal monotone one.  Both sampled Hessian
    conditions are evaluated and reported.
    """
    if sample_points is None:
        ub = u_box if u_box is not None else BoxDomain.cube(sys.nu, 1.0)
        prod = BoxDomain.product(sys.K.domain.shrink(0.95), ub)
        raw = prod.sample(n_samples, seed=seed)
        sample_points = [(p[:sys.nx], p[sys.nx:]) for p in raw]
    min_joint = np.inf
    min_xx = np.inf
    max_uu = -np.inf
    for x, u in sample_points:
        Hj = sys.joint_hessian(x, u)
        min_joint = min(min_joint, float(np.linalg.eigvalsh(0.5 * (Hj + Hj.T)).min()))
        nx = sys.nx
        min_xx = min(min_xx, float(np.linalg.eigvalsh(Hj[:nx, :nx]).min()))
        blk = Hj[nx:, nx:]
        max_uu = max(max_uu, float(np.linalg.eigvalsh(blk).max()) if blk.size else 0.0)
    pair = make_legendre_pair(sys.K, verify=False)
    return MonotoneClassification(
        cyclically_monotone=bool(min_joint >= -tol),
        monotone=bool(min_xx >= -tol and max_uu <= tol),
        min_joint_eigenvalue=float(min_joint),
        min_state_block_eigenvalue=float(min_xx),
        max_input_block_eigenvalue=float(max_uu),
        z_system=ZSpaceSystem(base=sys, pair=pair))


def incremental_passivity_check(zsys: ZSpaceSystem, traj_pairs: Sequence,
                                tol: float = 1e-8) -> dict:
    """Sampled incremental supply inequality along pairs of trajectories.

    Checks <grad K*(z1) - grad K*(z2), z1_dot - z2_dot> <= <y1 - y2, u1 - u2>
    at every common sample time, with the velocities evaluated through the
    right-hand side.
    """
    worst = -np.inf
    count = 0
    for ta, tb in traj_pairs:
        if len(ta.times) != len(tb.times) or not np.allclose(ta.times, tb.times):
            raise DimensionMismatchError("trajectory pair must share the time grid")
        for i in range(len(ta.times)):
            za, zb = ta.states[i], tb.states[i]
            ua, ub = ta.inputs[i], tb.inputs[i]
            xa, xb = zsys.x_of(za), zsys.x_of(zb)
            dza = zsys.rhs(za, ua) - zsys.rhs(zb, ub)
            lhs = float((xa - xb) @ dza)
            rhs_val = float((ta.outputs[i] - tb.outputs[i]) @ (ua - ub))
            worst = max(worst, lhs - rhs_val)
            count += 1
    return {"max_violation": float(worst), "incrementally_passive": bool(worst <= tol),
            "points": count}


def compatibility_identity_gaps(K: ScalarField, S: ScalarField, n_samples: int = 50,
                                seed: int = 0) -> dict:
    """Diagnostic gaps for the two candidate storage/metric identities.

    Reports max |S(x) - K*(grad K(x))| and max |K(x) - S*(grad S(x))| on a
    sampled set; neither identity is asserted.
    """
    if K.dim != S.dim:
        raise DimensionMismatchError("K and S must share a state space")
    gap_a = gap_b = 0.0
    for x in K.domain.shrink(0.9).sample(n_samples, seed=seed):
        conj_k = float(x @ K.grad(x)) - K(x)
        conj_s = float(x @ S.grad(x)) - S(x)
        gap_a = max(gap_a, abs(S(x) - conj_k))
        gap_b = max(gap_b, abs(K(x) - conj_s))
    return {"gap_storage_vs_conjugate_metric": gap_a,
            "gap_metric_vs_conjugate_storage": gap_b}
