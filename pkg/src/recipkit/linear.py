"""Linear input-state-output systems: reciprocity, passivity, compatibility.

Covers the symmetry test for reciprocity with respect to a constant metric
and a signature, the pseudo-gradient rewrite, dual realizations, impulse
response symmetry, metric recovery from input-output energy experiments,
the passivity linear matrix inequality (verification only, no solving),
the geometric-mean compatibility iteration, and the split normal form that
exposes a port-Hamiltonian structure with indefinite metric.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.linalg import expm

from .core import (
    ConvergenceError,
    DimensionMismatchError,
    SignatureMatrix,
    SingularMatrixError,
    as_matrix,
    as_vector,
    integrate_segment,
    symmetry_residual,
)

__all__ = [
    "LinearSystem",
    "LinearPseudoGradientForm",
    "LmiReport",
    "ReciprocityCheck",
    "ImpulseSymmetryCheck",
    "PastInput",
    "SplitPortHamiltonianForm",
    "check_linear_reciprocity",
    "to_pseudo_gradient",
    "dual_system",
    "impulse_response_symmetry",
    "recover_metric_hankel",
    "lmi_residual",
    "kernel_invariance_check",
    "build_monotone_image",
    "compatible_storage_fixed_point",
    "split_port_hamiltonian_form",
    "solve_dual_isomorphism",
    "spd_sqrt",
    "spd_geometric_mean",
]


@dataclass(frozen=True)
class LinearSystem:
    """x_dot = A x + B u, y = C x + D u with dense real matrices."""

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray

    def __post_init__(self):
        A = as_matrix(self.A)
        n = A.shape[0]
        if A.shape != (n, n):
            raise DimensionMismatchError("A must be square")
        B = np.asarray(self.B, dtype=float).reshape(n, -1)
        m = B.shape[1]
        C = np.asarray(self.C, dtype=float).reshape(-1, n)
        if C.shape[0] != m:
            raise DimensionMismatchError(f"C has {C.shape[0]} outputs, B has {m} inputs")
        D = np.asarray(self.D, dtype=float).reshape(m, m)
        for M in (A, B, C, D):
            if not np.all(np.isfinite(M)):
                raise DimensionMismatchError("system matrices must be finite")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "C", C)
        object.__setattr__(self, "D", D)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.B.shape[1]

    def transform(self, T) -> "LinearSystem":
        """Change of state coordinates x = T x_new."""
        T = as_matrix(T, (self.n, self.n))
        Ti = np.linalg.inv(T)
        return LinearSystem(Ti @ self.A @ T, Ti @ self.B, self.C @ T, self.D)


@dataclass(frozen=True)
class ReciprocityCheck:
    reciprocal: bool
    residual: float


def _check_metric(G, n) -> np.ndarray:
    Gm = as_matrix(G, (n, n))
    if symmetry_residual(Gm) > 1e-10:
        raise DimensionMismatchError("metric G must be symmetric")
    if abs(np.linalg.det(Gm)) < 1e-12:
        raise SingularMatrixError("metric G is numerically singular")
    return Gm


def check_linear_reciprocity(sys: LinearSystem, G, sigma: SignatureMatrix,
                             tol: float = 1e-8) -> ReciprocityCheck:
    """Symmetry residual of the stacked matrix [[G A, G B], [s C, s D]].

    The system is reciprocal with respect to (G, sigma) exactly when that
    matrix is symmetric.
    """
    Gm = _check_metric(G, sys.n)
    if sigma.m != sys.m:
        raise DimensionMismatchError("signature size must match input count")
    top = np.hstack([Gm @ sys.A, Gm @ sys.B])
    bot = np.hstack([sigma.conjugate_rows(sys.C), sigma.conjugate_rows(sys.D)])
    residual = symmetry_residual(np.vstack([top, bot]))
    return ReciprocityCheck(reciprocal=bool(residual <= tol), residual=residual)


@dataclass(frozen=True)
class LinearPseudoGradientForm:
    """G x_dot = -P x + C^T sigma u, sigma y = C x + sigma D u with P = -G A symmetric."""

    G: np.ndarray
    P: np.ndarray
    C: np.ndarray
    D: np.ndarray
    sigma: SignatureMatrix

    def __post_init__(self):
        G = _check_metric(self.G, as_matrix(self.G).shape[0])
        n = G.shape[0]
        P = as_matrix(self.P, (n, n))
        if symmetry_residual(P) > 1e-8:
            raise DimensionMismatchError(f"P must be symmetric (residual {symmetry_residual(P)})")
        C = np.asarray(self.C, dtype=float).reshape(-1, n)
        D = np.asarray(self.D, dtype=float).reshape(C.shape[0], C.shape[0])
        if symmetry_residual(self.sigma.conjugate_rows(D)) > 1e-8:
            raise DimensionMismatchError("sigma D must be symmetric")
        object.__setattr__(self, "G", G)
        object.__setattr__(self, "P", 0.5 * (P + P.T))
        object.__setattr__(self, "C", C)
        object.__setattr__(self, "D", D)

    @property
    def n(self) -> int:
        return self.G.shape[0]

    @property
    def m(self) -> int:
        return self.C.shape[0]

    def to_linear_system(self) -> LinearSystem:
        A = -np.linalg.solve(self.G, self.P)
        B = np.linalg.solve(self.G, self.C.T @ self.sigma.matrix)
        return LinearSystem(A, B, self.C, self.D)


def to_pseudo_gradient(sys: LinearSystem, G, sigma: SignatureMatrix,
                       tol: float = 1e-8) -> LinearPseudoGradientForm:
    """Rewrite a reciprocal system as G x_dot = -P x + C^T sigma u."""
    chk = check_linear_reciprocity(sys, G, sigma, tol)
    if not chk.reciprocal:
        raise DimensionMismatchError(
            f"system is not reciprocal for the given (G, sigma): residual {chk.residual:.3e}")
    Gm = _check_metric(G, sys.n)
    P = -(Gm @ sys.A)
    return LinearPseudoGradientForm(Gm, 0.5 * (P + P.T), sys.C, sys.D, sigma)


def dual_system(sys: LinearSystem, sigma: SignatureMatrix) -> LinearSystem:
    """Adjoint realization (A^T, C^T sigma, B^T, D^T sigma)."""
    if sigma.m != sys.m:
        raise DimensionMismatchError("signature size must match input count")
    s = sigma.matrix
    return LinearSystem(sys.A.T, sys.C.T @ s, sys.B.T, sys.D.T @ s)


@dataclass(frozen=True)
class ImpulseSymmetryCheck:
    symmetric: bool
    max_residual: float


def impulse_response_symmetry(sys: LinearSystem, sigma: SignatureMatrix,
                              times: Sequence[float], tol: float = 1e-8) -> ImpulseSymmetryCheck:
    """Check sigma W(t) = W(t)^T sigma for W(t) = C e^{At} B, plus the D term."""
    if sigma.m != sys.m:
        raise DimensionMismatchError("signature size must match input count")
    worst = symmetry_residual(sigma.conjugate_rows(sys.D))
    for t in times:
        W = sys.C @ expm(sys.A * float(t)) @ sys.B
        worst = max(worst, symmetry_residual(sigma.conjugate_rows(W)))
    return ImpulseSymmetryCheck(symmetric=bool(worst <= tol), max_residual=float(worst))


@dataclass(frozen=True)
class PastInput:
    """Input signal supported on (-duration, 0], evaluated at s <= 0."""

    signal: Callable[[float], np.ndarray]
    duration: float


def _hurwitz_rate(A: np.ndarray, margin: float) -> float:
    alpha = -float(np.max(np.real(np.linalg.eigvals(A))))
    if alpha <= margin:
        raise ConvergenceError(
            f"A is not Hurwitz with margin {margin} (decay rate {alpha:.3e})")
    return alpha


def recover_metric_hankel(sys: LinearSystem, sigma: SignatureMatrix,
                          horizon: float, past_inputs: Sequence[PastInput],
                          quad_tol: float = 1e-10, tail_tol: float = 1e-10,
                          hurwitz_margin: float = 1e-3) -> np.ndarray:
    """Recover the reciprocity metric from input-output energy pairings.

    For each past input u on (-T, 0] the reachable state is
    x(0) = int_{-T}^0 e^{-As} B u(s) ds and the pairing

        q(x(0)) = int_0^inf (sigma y)(t) . u(-t) dt,   y(t) = C e^{At} x(0),

    equals the quadratic form x(0)^T G x(0).  The metric is reconstructed by
    polarization over pairwise-summed inputs.  Requires a Hurwitz A and n
    linearly independent reachable states.
    """
    n, m = sys.n, sys.m
    alpha = _hurwitz_rate(sys.A, hurwitz_margin)
    if len(past_inputs) < n:
        raise DimensionMismatchError(f"need at least {n} past inputs, got {len(past_inputs)}")

    expm_cache: dict = {}

    def propagator(t: float) -> np.ndarray:
        key = round(float(t), 14)
        if key not in expm_cache:
            expm_cache[key] = expm(sys.A * float(t))
        return expm_cache[key]

    def reach_state(p: PastInput) -> np.ndarray:
        def f(s):
            return propagator(-s) @ sys.B @ as_vector(p.signal(s), m)
        return integrate_segment(f, -float(p.duration), 0.0, tol=quad_tol)

    states = [reach_state(p) for p in past_inputs]
    X = np.stack(states, axis=1)
    if np.linalg.matrix_rank(X, tol=1e-8 * max(1.0, float(np.max(np.abs(X))))) < n:
        raise SingularMatrixError("past inputs produce rank-deficient reachable states")
    # greedy column pivoting: pick the n most independent reachable states
    chosen: list = []
    remaining = list(range(X.shape[1]))
    basis = np.zeros((n, 0))
    for _ in range(n):
        best, best_res = None, -1.0
        for j in remaining:
            v = X[:, j]
            if basis.shape[1]:
                proj = basis @ np.linalg.lstsq(basis, v, rcond=None)[0]
                res = float(np.linalg.norm(v - proj))
            else:
                res = float(np.linalg.norm(v))
            if res > best_res:
                best, best_res = j, res
        if best_res < 1e-10:
            raise SingularMatrixError("past inputs produce rank-deficient reachable states")
        chosen.append(best)
        remaining.remove(best)
        basis = X[:, chosen]
    idx = chosen
    Xn = X[:, idx]
    sel = [past_inputs[i] for i in idx]

    bnorm = float(np.linalg.norm(sys.B, 2))
    cnorm = float(np.linalg.norm(sys.C, 2))

    def pairing(x0: np.ndarray, combined: Sequence[PastInput]) -> float:
        T = horizon
        while cnorm * bnorm * float(np.linalg.norm(x0)) * np.exp(-alpha * T) / alpha > tail_tol:
            T *= 2.0
            if T > 1e7:
                raise ConvergenceError("forward horizon extension diverged")

        def f(t):
            y = sys.C @ propagator(t) @ x0
            u_at = np.zeros(m)
            for p in combined:
                if -t >= -p.duration:
                    u_at = u_at + as_vector(p.signal(-t), m)
            return float(sigma.apply(y) @ u_at)

        return float(integrate_segment(f, 0.0, T, tol=quad_tol))

    qdiag = [pairing(Xn[:, i], [sel[i]]) for i in range(n)]
    S = np.diag(np.array(qdiag))
    for i in range(n):
        for j in range(i + 1, n):
            qs = pairing(Xn[:, i] + Xn[:, j], [sel[i], sel[j]])
            S[i, j] = S[j, i] = 0.5 * (qs - qdiag[i] - qdiag[j])
    Xi = np.linalg.inv(Xn)
    G = Xi.T @ S @ Xi
    return 0.5 * (G + G.T)


@dataclass(frozen=True)
class LmiReport:
    """Verification of the passivity linear matrix inequality for a given Q."""

    Pi: np.ndarray
    min_eigenvalue: float
    passive: bool
    kernel_basis: tuple

    @property
    def kernel_dimension(self) -> int:
        return len(self.kernel_basis)


def lmi_residual(sys: LinearSystem, Q, tol: float = 1e-9,
                 kernel_floor: float = 1e-10) -> LmiReport:
    """Assemble Pi = [[-QA - A^T Q, -QB + C^T], [-B^T Q + C, D + D^T]] and verify it.

    passive is true when the smallest eigenvalue of Pi is >= -tol and Q is
    positive semidefinite to the same tolerance.  No semidefinite program is
    solved; Q is supplied by the caller.
    """
    Qm = as_matrix(Q, (sys.n, sys.n))
    if symmetry_residual(Qm) > 1e-10:
        raise DimensionMismatchError("Q must be symmetric")
    top = np.hstack([-(Qm @ sys.A) - sys.A.T @ Qm, -(Qm @ sys.B) + sys.C.T])
    bot = np.hstack([-(sys.B.T @ Qm) + sys.C, sys.D + sys.D.T])
    Pi = np.vstack([top, bot])
    Pi = 0.5 * (Pi + Pi.T)
    min_eig = float(np.linalg.eigvalsh(Pi).min())
    q_eigs = np.linalg.eigvalsh(Qm)
    passive = bool(min_eig >= -tol and q_eigs.min() >= -tol)
    # kernel of Q from its eigendecomposition
    w, V = np.linalg.eigh(Qm)
    kernel = tuple(V[:, i].copy() for i in range(len(w)) if abs(w[i]) < kernel_floor)
    return LmiReport(Pi=Pi, min_eigenvalue=min_eig, passive=passive, kernel_basis=kernel)


def kernel_invariance_check(sys: LinearSystem, Q, tol: float = 1e-8) -> dict:
    """For a storage candidate Q passing the LMI, ker Q is A-invariant and inside ker C."""
    report = lmi_residual(sys, Q)
    if not report.passive:
        raise ConvergenceError(
            f"Q fails the passivity LMI (min eig {report.min_eigenvalue:.3e}); "
            "kernel invariance is not guaranteed")
    Qm = as_matrix(Q, (sys.n, sys.n))
    scale = 1.0 + float(np.max(np.abs(Qm))) * float(np.max(np.abs(sys.A)))
    a_inv = True
    in_ker_c = True
    for v in report.kernel_basis:
        if float(np.linalg.norm(Qm @ (sys.A @ v))) > tol * scale:
            a_inv = False
        if float(np.linalg.norm(sys.C @ v)) > tol * (1.0 + float(np.max(np.abs(sys.C)))):
            in_ker_c = False
    return {"A_invariant": a_inv, "inside_ker_C": in_ker_c,
            "kernel_dimension": report.kernel_dimension}


def build_monotone_image(sys: LinearSystem, Q, tol: float = 1e-9) -> dict:
    """Image representation M1 = [[-A, -B], [C, D]], M2 = [[Q, 0], [0, I]].

    The associated relation is monotone exactly when M2^T M1 + (M2^T M1)^T
    is positive semidefinite, which coincides with the passivity LMI matrix.
    """
    Qm = as_matrix(Q, (sys.n, sys.n))
    n, m = sys.n, sys.m
    M1 = np.vstack([np.hstack([-sys.A, -sys.B]), np.hstack([sys.C, sys.D])])
    M2 = np.vstack([np.hstack([Qm, np.zeros((n, m))]),
                    np.hstack([np.zeros((m, n)), np.eye(m)])])
    W = M2.T @ M1
    S = W + W.T
    min_eig = float(np.linalg.eigvalsh(0.5 * (S + S.T)).min())
    return {"M1": M1, "M2": M2, "symmetric_part": 0.5 * (S + S.T),
            "min_eigenvalue": min_eig, "monotone": bool(min_eig >= -tol)}


def spd_sqrt(M: np.ndarray) -> np.ndarray:
    """Symmetric square root of a symmetric positive definite matrix."""
    w, V = np.linalg.eigh(0.5 * (M + M.T))
    if w.min() <= 0:
        raise SingularMatrixError(f"matrix not positive definite (min eig {w.min():.3e})")
    return (V * np.sqrt(w)) @ V.T


def spd_geometric_mean(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Geometric mean A # B = A^(1/2) (A^(-1/2) B A^(-1/2))^(1/2) A^(1/2)."""
    R = spd_sqrt(A)
    Ri = np.linalg.inv(R)
    inner = spd_sqrt(Ri @ B @ Ri)
    out = R @ inner @ R
    return 0.5 * (out + out.T)


def compatible_storage_fixed_point(sys: LinearSystem, G, Q0, max_iter: int = 100,
                                   tol: float = 1e-11, lmi_tol: float = 1e-8,
                                   sigma: Optional[SignatureMatrix] = None) -> dict:
    """Iterate Q <- Q # (G Q^-1 G) to a storage compatible with the metric.

    Fixed points satisfy Q = G Q^-1 G.  For positive definite G the unique
    compatible storage is Q = G and the iteration lands there in one step.
    For indefinite G the limit depends on Q0; the returned Q is the limit of
    the iteration started from the supplied Q0 (no canonical choice is made).
    """
    Gm = _check_metric(G, sys.n)
    if sigma is not None:
        chk = check_linear_reciprocity(sys, Gm, sigma)
        if not chk.reciprocal:
            raise ConvergenceError(
                f"system not reciprocal for (G, sigma): residual {chk.residual:.3e}")
    Q = as_matrix(Q0, (sys.n, sys.n))
    if symmetry_residual(Q) > 1e-10:
        raise DimensionMismatchError("Q0 must be symmetric")
    if np.linalg.eigvalsh(Q).min() <= 0:
        raise SingularMatrixError("Q0 must be positive definite")
    start = lmi_residual(sys, Q, tol=lmi_tol)
    if not start.passive:
        raise ConvergenceError(
            f"Q0 fails the passivity LMI (min eig {start.min_eigenvalue:.3e})")

    iterations = 0
    gap = float(np.max(np.abs(Q - Gm @ np.linalg.solve(Q, Gm))))
    while gap > tol:
        if iterations >= max_iter:
            raise ConvergenceError(
                f"compatibility iteration exceeded {max_iter} steps (gap {gap:.3e})")
        target = Gm @ np.linalg.solve(Q, Gm)
        target = 0.5 * (target + target.T)
        Q = spd_geometric_mean(Q, target)
        iterations += 1
        gap = float(np.max(np.abs(Q - Gm @ np.linalg.solve(Q, Gm))))
    final = lmi_residual(sys, Q, tol=lmi_tol)
    if final.min_eigenvalue < -lmi_tol:
        raise ConvergenceError(
            f"compatibility limit violates the LMI (min eig {final.min_eigenvalue:.3e})")
    return {"Q": Q, "iterations": iterations, "compatibility_gap": gap,
            "lmi_min_eigenvalue": final.min_eigenvalue}


@dataclass(frozen=True)
class SplitPortHamiltonianForm:
    """Split coordinates exposing z_dot = (J - R) grad H(z) + [C1^T; 0] u.

    z = blkdiag(Q1, Q2) T^-1 x, H(z) = z1.Q1^-1 z1 / 2 + z2.Q2^-1 z2 / 2,
    J = [[0, -Pc], [Pc^T, 0]] skew, R = blkdiag(P1, -P2) >= 0.
    """

    T: np.ndarray                # x = T x_tilde
    z_from_x: np.ndarray
    x_from_z: np.ndarray
    J: np.ndarray
    R: np.ndarray
    Q1: np.ndarray
    Q2: np.ndarray
    P1: np.ndarray
    P2: np.ndarray
    Pc: np.ndarray
    C1: np.ndarray
    D: np.ndarray
    k: int

    @property
    def n(self) -> int:
        return self.J.shape[0]

    def hamiltonian(self, z) -> float:
        zz = as_vector(z, self.n)
        z1, z2 = zz[:self.k], zz[self.k:]
        val = 0.0
        if self.k:
            val += 0.5 * float(z1 @ np.linalg.solve(self.Q1, z1))
        if self.n - self.k:
            val += 0.5 * float(z2 @ np.linalg.solve(self.Q2, z2))
        return val

    def to_linear_system(self) -> LinearSystem:
        Qblk = np.zeros((self.n, self.n))
        if self.k:
            Qblk[:self.k, :self.k] = self.Q1
        if self.n - self.k:
            Qblk[self.k:, self.k:] = self.Q2
        Qinv = np.linalg.inv(Qblk)
        m = self.C1.shape[0]
        Bz = np.vstack([self.C1.T, np.zeros((self.n - self.k, m))])
        Cz = np.hstack([self.C1, np.zeros((m, self.n - self.k))]) @ Qinv
        return LinearSystem((self.J - self.R) @ Qinv, Bz, Cz, self.D)


def _sign_normalize_columns(V: np.ndarray) -> np.ndarray:
    W = V.copy()
    for j in range(W.shape[1]):
        i = int(np.argmax(np.abs(W[:, j])))
        if W[i, j] < 0:
            W[:, j] = -W[:, j]
    return W


def split_port_hamiltonian_form(pg: LinearPseudoGradientForm, Q,
                                snap_tol: float = 1e-6, c_tol: float = 1e-8,
                                sign_tol: float = 1e-10) -> SplitPortHamiltonianForm:
    """Diagonalize a compatible pair (G, Q) into the split normal form.

    Requires sigma = I, Q symmetric positive definite and compatible with the
    metric (Q = G Q^-1 G); the involution G^-1 Q then has eigenvalues +/-1,
    which are snapped within snap_tol.  In the adapted basis Q and G are
    block diagonal, the internal potential splits into blocks P1 >= 0,
    P2 <= 0 and a coupling Pc, and the output matrix concentrates on the
    first block.
    """
    if not pg.sigma.is_identity:
        raise DimensionMismatchError("split normal form requires sigma = I")
    n = pg.n
    Qm = as_matrix(Q, (n, n))
    if symmetry_residual(Qm) > 1e-10:
        raise DimensionMismatchError("Q must be symmetric")
    if np.linalg.eigvalsh(Qm).min() <= 0:
        raise SingularMatrixError("Q must be positive definite")
    compat = float(np.max(np.abs(Qm - pg.G @ np.linalg.solve(Qm, pg.G))))
    if compat > 1e-7 * (1.0 + float(np.max(np.abs(Qm)))):
        raise ConvergenceError(f"Q is not compatible with G (gap {compat:.3e})")

    R = spd_sqrt(Qm)
    Ri = np.linalg.inv(R)
    N = R @ np.linalg.solve(pg.G, R)
    N = 0.5 * (N + N.T)
    w, V = np.linalg.eigh(N)
    if np.max(np.abs(np.abs(w) - 1.0)) > snap_tol:
        raise ConvergenceError(
            f"eigenvalues of G^-1 Q do not snap to +/-1: {w}")
    order = np.argsort(-w)  # +1 block first
    w = w[order]
    V = _sign_normalize_columns(V[:, order])
    k = int(np.sum(w > 0))

    if k == n or k == 0:
        # G = +/-Q already; no basis change, z = Q x
        T = np.eye(n)
        Q1 = Qm if k == n else np.zeros((0, 0))
        Q2 = Qm if k == 0 else np.zeros((0, 0))
        P1 = pg.P if k == n else np.zeros((0, 0))
        P2 = pg.P if k == 0 else np.zeros((0, 0))
        Pc = np.zeros((k, n - k))
        C1 = pg.C if k == n else np.zeros((pg.m, 0))
        C2 = pg.C if k == 0 else np.zeros((pg.m, 0))
        z_from_x = Qm
    else:
        T = Ri @ V
        Q1 = np.eye(k)
        Q2 = np.eye(n - k)
        Pt = T.T @ pg.P @ T
        Pt = 0.5 * (Pt + Pt.T)
        P1 = Pt[:k, :k]
        Pc = Pt[:k, k:]
        P2 = Pt[k:, k:]
        Ct = pg.C @ T
        C1 = Ct[:, :k]
        C2 = Ct[:, k:]
        z_from_x = np.linalg.inv(T)  # Q_tilde = I, so z = T^-1 x

    # structural verifications
    Gt = T.T @ pg.G @ T
    goal = np.zeros((n, n))
    if k:
        goal[:k, :k] = Q1
    if n - k:
        goal[k:, k:] = -Q2
    if float(np.max(np.abs(Gt - goal))) > 1e-8 * (1.0 + float(np.max(np.abs(pg.G)))):
        raise ConvergenceError("adapted basis failed to block-diagonalize the metric")
    if k and np.linalg.eigvalsh(P1).min() < -sign_tol:
        raise ConvergenceError(
            f"P1 block not positive semidefinite (min eig {np.linalg.eigvalsh(P1).min():.3e}); "
            "system is not passive in split form")
    if (n - k) and np.linalg.eigvalsh(P2).max() > sign_tol:
        raise ConvergenceError(
            f"P2 block not negative semidefinite (max eig {np.linalg.eigvalsh(P2).max():.3e})")
    if C2.size and float(np.max(np.abs(C2))) > c_tol * (1.0 + float(np.max(np.abs(pg.C)))):
        raise ConvergenceError(
            f"output matrix does not vanish on the second block (|C2| = {np.max(np.abs(C2)):.3e})")

    J = np.zeros((n, n))
    J[:k, k:] = -Pc
    J[k:, :k] = Pc.T
    Rmat = np.zeros((n, n))
    if k:
        Rmat[:k, :k] = P1
    if n - k:
        Rmat[k:, k:] = -P2
    return SplitPortHamiltonianForm(
        T=T, z_from_x=z_from_x, x_from_z=np.linalg.inv(z_from_x),
        J=J, R=Rmat, Q1=Q1, Q2=Q2, P1=P1, P2=P2, Pc=Pc, C1=C1, D=pg.D, k=k)


def solve_dual_isomorphism(sys: LinearSystem, sigma: SignatureMatrix,
                           tol: float = 1e-8) -> np.ndarray:
    """Construct the metric linking a single-input system to its dual.

    Uses G [B, AB, ...] = [C; CA; ...]^T sigma, which determines G for a
    controllable single-input single-output system; the result is verified
    to be symmetric and to satisfy the reciprocity symmetry.
    """
    if sys.m != 1:
        raise DimensionMismatchError("dual isomorphism construction needs a SISO system")
    n = sys.n
    R = np.hstack([np.linalg.matrix_power(sys.A, i) @ sys.B for i in range(n)])
    O = np.vstack([sys.C @ np.linalg.matrix_power(sys.A, i) for i in range(n)])
    if np.linalg.matrix_rank(R, tol=1e-10 * max(1.0, float(np.max(np.abs(R))))) < n:
        raise SingularMatrixError("system is not controllable; metric is not determined")
    s = float(sigma.signs[0])
    G = np.linalg.solve(R.T, (O * s)).T  # G R = O^T s  =>  R^T G^T = s O
    G = 0.5 * (G + G.T)
    chk = check_linear_reciprocity(sys, G, sigma, tol=tol * (1.0 + float(np.max(np.abs(G)))))
    if not chk.reciprocal:
        raise ConvergenceError(
            f"constructed metric fails the reciprocity symmetry (residual {chk.residual:.3e})")
    return G
