"""
Quantum entropies, rotated Petz recovery maps and recoverability bounds.

Natural logarithms throughout. Logarithms and negative powers act on
supports (``log 0 = 0``, ``0**z = 0``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.optimize

from .densities import QuadratureRule, make_quadrature
from .linalg import (
    DomainError,
    check_psd,
    complex_power,
    dagger,
    frechet_dexp,
    hermitian_eig,
    hermitian_part,
    kron,
    matrix_exp,
    matrix_log,
    partial_trace,
    singular_values,
    support_projector,
    support_threshold,
)

TRACE_TOL = 1e-10
SUPPORT_LEAK_TOL = 1e-10
KRAUS_TOL = 1e-10
DEFAULT_QUAD_TOL = 1e-10


def check_density(rho, name: str = "rho") -> np.ndarray:
    rho = check_psd(rho, name)
    tr = np.trace(rho).real
    if abs(tr - 1.0) > TRACE_TOL:
        raise ValueError(f"{name} has trace {tr}, expected 1")
    return rho


def _entropy_from_eigs(w: np.ndarray) -> float:
    w = w[w > support_threshold(w)]
    return float(-np.sum(w * np.log(w)))


def von_neumann_entropy(rho) -> float:
    rho = check_psd(rho, "rho")
    return _entropy_from_eigs(hermitian_eig(rho).eigenvalues)


def cond_mutual_info(rho_abc, dims: Sequence[int]) -> float:
    """I(A:C|B) = H(AB) + H(BC) - H(B) - H(ABC)."""
    if dims is None or len(dims) != 3:
        raise ValueError("conditional mutual information needs three subsystem dimensions")
    rho_abc = check_density(rho_abc, "rho_ABC")
    rho_ab = partial_trace(rho_abc, dims, 2)
    rho_bc = partial_trace(rho_abc, dims, 0)
    rho_b = partial_trace(rho_abc, dims, [0, 2])
    return (von_neumann_entropy(rho_ab) + von_neumann_entropy(rho_bc)
            - von_neumann_entropy(rho_b) - von_neumann_entropy(rho_abc))


def support_leak(rho, sigma) -> float:
    """Weight of ``rho`` outside the support of ``sigma``."""
    P = support_projector(sigma)
    return float(np.trace(rho @ (np.eye(P.shape[0]) - P)).real)


def relative_entropy(rho, sigma) -> float:
    """D(rho||sigma) = tr rho (log rho - log sigma), or +inf without support inclusion."""
    rho = check_density(rho)
    sigma = check_psd(sigma, "sigma")
    if support_leak(rho, sigma) > SUPPORT_LEAK_TOL:
        return math.inf
    return float(np.trace(rho @ (matrix_log(rho) - matrix_log(sigma))).real)


def umegaki_variational_value(rho, sigma, omega) -> float:
    """tr rho log omega + 1 - tr exp(log sigma + log omega), a lower bound on D(rho||sigma)."""
    w = hermitian_eig(omega).eigenvalues
    if w[0] <= support_threshold(w):
        raise DomainError("omega must be positive definite")
    lo = matrix_log(omega)
    return float(np.trace(rho @ lo).real + 1.0 - np.trace(matrix_exp(matrix_log(sigma) + lo)).real)


def measured_variational_value(rho, sigma, omega) -> float:
    """tr rho log omega + 1 - tr sigma omega."""
    return float(np.trace(rho @ matrix_log(omega)).real + 1.0 - np.trace(sigma @ omega).real)


def fidelity(rho, sigma) -> float:
    """Uhlmann fidelity ||sqrt(rho) sqrt(sigma)||_1^2."""
    s = singular_values(complex_power(check_psd(rho, "rho"), 0.5)
                        @ complex_power(check_psd(sigma, "sigma"), 0.5))
    return float(np.sum(s) ** 2)


def petz_renyi_2(rho, sigma) -> float:
    """D_2(rho||sigma) = log tr rho^2 sigma^{-1}, inverse taken on the support."""
    rho, sigma = check_psd(rho, "rho"), check_psd(sigma, "sigma")
    if support_leak(rho, sigma) > SUPPORT_LEAK_TOL:
        return math.inf
    return math.log(np.trace(rho @ rho @ complex_power(sigma, -1.0)).real)


# --- measured relative entropy -------------------------------------------------


def _hermitian_basis(d: int) -> np.ndarray:
    """Orthonormal basis (Hilbert-Schmidt) of d x d Hermitian matrices."""
    basis = []
    for i in range(d):
        E = np.zeros((d, d), dtype=complex)
        E[i, i] = 1.0
        basis.append(E)
    for i in range(d):
        for j in range(i + 1, d):
            S = np.zeros((d, d), dtype=complex)
            S[i, j] = S[j, i] = 1.0 / math.sqrt(2.0)
            A = np.zeros((d, d), dtype=complex)
            A[i, j], A[j, i] = -1j / math.sqrt(2.0), 1j / math.sqrt(2.0)
            basis += [S, A]
    return np.array(basis)


def measured_objective(H, rho, sigma) -> float:
    """tr rho H + 1 - tr sigma exp(H), the measured variational objective with omega = e^H."""
    return float(np.trace(rho @ H).real + 1.0 - np.trace(sigma @ matrix_exp(H)).real)


def measured_gradient(H, rho, sigma) -> np.ndarray:
    """Gradient of :func:`measured_objective` in the trace inner product."""
    return hermitian_part(rho - frechet_dexp(H, sigma))


@dataclass(frozen=True)
class MeasuredResult:
    value: float
    omega: np.ndarray = field(repr=False)
    converged: bool
    grad_norm: float
    iterations: int


def _newton_polish(fun, x, gtol: float, steps: int = 8, h: float = 1e-6) -> np.ndarray:
    """Refine a quasi-Newton solution with damped Newton steps.

    The Hessian is formed by central differences of the exact gradient.
    Steps are accepted only if they do not lower the objective.
    """
    f, g = fun(x)
    n = len(x)
    for _ in range(steps):
        if np.linalg.norm(g) <= gtol / 10:
            break
        Hm = np.empty((n, n))
        for k in range(n):
            e = np.zeros(n)
            e[k] = h
            Hm[:, k] = (fun(x + e)[1] - fun(x - e)[1]) / (2 * h)
        Hm = 0.5 * (Hm + Hm.T)
        try:
            step = -np.linalg.solve(Hm, g)
        except np.linalg.LinAlgError:
            break
        for scale in (1.0, 0.5, 0.25, 0.125):
            xn = x + scale * step
            fn, gn = fun(xn)
            if fn <= f + 1e-15 * max(1.0, abs(f)):
                x, f, g = xn, fn, gn
                break
        else:
            break
    return x


def measured_relative_entropy(rho, sigma, gtol: float = 1e-9, maxiter: int = 500) -> MeasuredResult:
    """Lower estimate of D_M(rho||sigma) by maximizing over omega = exp(H).

    The objective is smooth in the Hermitian parameter H, and its gradient
    is ``rho - Dexp_H[sigma]``. Quasi-Newton (BFGS) ascent starts from the
    better of ``H = 0`` and ``H = log rho - log sigma`` (optimal when the two
    commute). Any omega yields a valid lower bound, so the returned value
    is a certified lower bound whether or not the run converged.
    """
    rho = check_density(rho)
    sigma = check_psd(sigma, "sigma")
    d = rho.shape[0]
    B = _hermitian_basis(d)

    def to_h(x):
        return np.tensordot(x, B, axes=(0, 0))

    def fun(x):
        H = to_h(x)
        G = measured_gradient(H, rho, sigma)
        g = np.einsum("kij,ji->k", B, G).real
        return -measured_objective(H, rho, sigma), -g

    starts = [np.zeros((d, d), dtype=complex), matrix_log(rho) - matrix_log(sigma)]
    H0 = max(starts, key=lambda H: measured_objective(H, rho, sigma))
    x0 = np.einsum("kij,ji->k", B, H0).real
    res = scipy.optimize.minimize(fun, x0, jac=True, method="BFGS",
                                  options={"gtol": gtol / 10, "maxiter": maxiter})
    x = res.x if -res.fun >= -fun(x0)[0] else x0
    x = _newton_polish(fun, x, gtol)
    H = to_h(x)
    value = measured_objective(H, rho, sigma)
    gnorm = float(np.linalg.norm(measured_gradient(H, rho, sigma)))
    return MeasuredResult(value, matrix_exp(H), gnorm <= gtol, gnorm, int(res.nit))


# --- channels ------------------------------------------------------------------


@dataclass(frozen=True)
class Channel:
    """Completely positive trace-preserving map in Kraus form (d_out x d_in operators)."""

    kraus: tuple

    def __init__(self, kraus):
        ks = tuple(np.asarray(K, dtype=complex) for K in kraus)
        if not ks:
            raise ValueError("need at least one Kraus operator")
        d_in = ks[0].shape[1]
        if any(K.shape != ks[0].shape for K in ks):
            raise ValueError("Kraus operators must share one shape")
        completeness = sum(dagger(K) @ K for K in ks)
        if np.abs(completeness - np.eye(d_in)).max() > KRAUS_TOL:
            raise ValueError("Kraus operators are not trace preserving")
        object.__setattr__(self, "kraus", ks)

    @property
    def d_in(self) -> int:
        return self.kraus[0].shape[1]

    @property
    def d_out(self) -> int:
        return self.kraus[0].shape[0]

    def __call__(self, X) -> np.ndarray:
        return sum(K @ X @ dagger(K) for K in self.kraus)

    def adjoint(self, Y) -> np.ndarray:
        return sum(dagger(K) @ Y @ K for K in self.kraus)


def as_channel(N) -> Channel:
    return N if isinstance(N, Channel) else Channel(N)


def stinespring(N) -> np.ndarray:
    """Isometry ``U = sum_i K_i (x) |i>`` into output (x) environment."""
    N = as_channel(N)
    r = len(N.kraus)
    U = np.zeros((N.d_out * r, N.d_in), dtype=complex)
    for i, K in enumerate(N.kraus):
        e = np.zeros((r, 1))
        e[i, 0] = 1.0
        U += np.kron(K, e)
    return U


def partial_trace_channel(dims: Sequence[int]) -> Channel:
    """Kraus form of tr_B on a bipartite system: K_j = id_A (x) <j|."""
    dA, dB = dims
    ks = []
    for j in range(dB):
        bra = np.zeros((1, dB))
        bra[0, j] = 1.0
        ks.append(np.kron(np.eye(dA), bra))
    return Channel(ks)


# --- rotated Petz recovery -----------------------------------------------------


def _powers(A, z: np.ndarray) -> np.ndarray:
    """Stack of A**z_n on the support of A."""
    w, V = hermitian_eig(A)
    on = w > support_threshold(w)
    lw = np.where(on, np.log(np.where(on, w, 1.0)), 0.0)
    diag = np.where(on, np.exp(np.multiply.outer(z, lw)), 0.0)
    return np.einsum("ij,nj,kj->nik", V, diag, V.conj())


def _nodes(t, quad: QuadratureRule | None):
    """Return (t array, weights or None) for a fixed phase or a beta_0 average."""
    if t is not None:
        return np.atleast_1d(np.asarray(t, dtype=float)), None
    if quad is None:
        quad = make_quadrature(0.0, DEFAULT_QUAD_TOL)
    if quad.theta != 0.0:
        raise ValueError("recovery maps average against beta_0")
    return quad.nodes, quad.density_weights


def rotated_petz_partial_stack(sigma_ab, x_a, dims: Sequence[int], ts: np.ndarray) -> np.ndarray:
    """R^[t](X_A) for every t in ``ts``; shape (len(ts), dA dB, dA dB)."""
    sigma_ab = check_psd(sigma_ab, "sigma_AB")
    dA, dB = (int(d) for d in dims)
    sigma_a = partial_trace(sigma_ab, (dA, dB), 1)
    x_a = np.asarray(x_a, dtype=complex)
    if x_a.shape != (dA, dA):
        raise ValueError("X_A has the wrong dimension")
    P = support_projector(sigma_a)
    if np.abs(x_a - P @ x_a @ P).max() > SUPPORT_LEAK_TOL * max(1.0, float(np.abs(x_a).max())):
        raise DomainError("X_A is not supported on supp(sigma_A)")
    outer = _powers(sigma_ab, (1.0 + 1j * ts) / 2.0)
    inner_l = _powers(sigma_a, -(1.0 + 1j * ts) / 2.0)
    inner = inner_l @ x_a[None] @ dagger(inner_l)
    eye_b = np.eye(dB)
    lifted = np.einsum("nij,kl->nikjl", inner, eye_b).reshape(len(ts), dA * dB, dA * dB)
    return outer @ lifted @ dagger(outer)


def rotated_petz_partial(sigma_ab, x_a, dims: Sequence[int], t: float | None = None,
                         quad: QuadratureRule | None = None) -> np.ndarray:
    """Rotated Petz map for the partial trace over B.

    ``R^[t](X) = s^{(1+it)/2} (sA^{-(1+it)/2} X sA^{-(1-it)/2} (x) id_B) s^{(1-it)/2}``
    with ``s = sigma_AB`` and ``sA = tr_B sigma_AB``. With ``t=None`` the
    result is averaged over t against beta_0.
    """
    ts, wts = _nodes(t, quad)
    stack = rotated_petz_partial_stack(sigma_ab, x_a, dims, ts)
    out = stack[0] if wts is None else np.tensordot(wts, stack, axes=(0, 0))
    return hermitian_part(out)


def rotated_petz_channel(sigma, N, X, t: float | None = None,
                         quad: QuadratureRule | None = None) -> np.ndarray:
    """Rotated Petz map ``s^{(1+it)/2} N^dag(N(s)^{-(1+it)/2} X N(s)^{-(1-it)/2}) s^{(1-it)/2}``."""
    N = as_channel(N)
    sigma = check_psd(sigma, "sigma")
    n_sigma = hermitian_part(N(sigma))
    X = np.asarray(X, dtype=complex)
    P = support_projector(n_sigma)
    if np.abs(X - P @ X @ P).max() > SUPPORT_LEAK_TOL * max(1.0, float(np.abs(X).max())):
        raise DomainError("input is not supported on supp(N(sigma))")
    ts, wts = _nodes(t, quad)
    outer = _powers(sigma, (1.0 + 1j * ts) / 2.0)
    inner_l = _powers(n_sigma, -(1.0 + 1j * ts) / 2.0)
    inner = inner_l @ X[None] @ dagger(inner_l)
    pulled = np.array([N.adjoint(Y) for Y in inner])
    stack = outer @ pulled @ dagger(outer)
    out = stack[0] if wts is None else np.tensordot(wts, stack, axes=(0, 0))
    return hermitian_part(out)


# --- recoverability reports ------------------------------------------------------


def _fidelity_stack(rho, stack) -> np.ndarray:
    sr = complex_power(rho, 0.5)
    w, V = np.linalg.eigh(hermitian_part_stack(stack))
    sq = np.einsum("nij,nj,nkj->nik", V, np.sqrt(np.clip(w, 0.0, None)), V.conj())
    s = np.linalg.svd(sr[None] @ sq, compute_uv=False)
    return np.sum(s, axis=-1) ** 2


def _renyi2_stack(rho, stack) -> np.ndarray:
    w, V = np.linalg.eigh(hermitian_part_stack(stack))
    thr = SUPPORT_LEAK_TOL * np.maximum(np.abs(w).max(axis=-1, keepdims=True), 1.0)
    on = w > thr
    inv = np.where(on, 1.0 / np.where(on, w, 1.0), 0.0)
    r2 = rho @ rho
    vals = np.einsum("ij,nji->n", r2, np.einsum("nij,nj,nkj->nik", V, inv, V.conj())).real
    leak = np.einsum("ij,nji->n", rho, np.einsum("nij,nj,nkj->nik", V, (~on).astype(float), V.conj())).real
    with np.errstate(divide="ignore"):
        return np.where(leak > SUPPORT_LEAK_TOL, np.inf, np.log(vals))


def hermitian_part_stack(S) -> np.ndarray:
    return 0.5 * (S + dagger(S))


@dataclass(frozen=True)
class RecoverabilityReport:
    delta: float
    dm: float
    neg_log_f: float
    appf_lower: float
    appf_upper: float
    converged: bool
    quad_error: float
    optimizer_slack: float
    recovered: np.ndarray = field(repr=False)

    def tol(self, atol: float = 1e-7) -> float:
        return self.quad_error + self.optimizer_slack + atol

    def checks(self, atol: float = 1e-7) -> dict:
        tol = self.tol(atol)
        return {
            "delta>=dm": self.delta >= self.dm - tol,
            "delta>=neglogf": self.delta >= self.neg_log_f - tol,
            "delta>=appf_lower": self.delta >= self.appf_lower - tol,
            "delta<=appf_upper": self.delta <= self.appf_upper + tol,
        }

    def holds(self, atol: float = 1e-7) -> bool:
        return all(self.checks(atol).values())


def strengthened_monotonicity_report(rho_ab, sigma_ab, dims: Sequence[int],
                                     quad: QuadratureRule | None = None,
                                     gtol: float = 1e-9) -> RecoverabilityReport:
    """Remainder of monotonicity under tr_B against its recoverability bounds.

    ``delta = D(rho_AB||sigma_AB) - D(rho_A||sigma_A)`` is compared with the
    measured relative entropy and ``-log F`` between ``rho_AB`` and the
    beta_0-averaged recovery of ``rho_A``, and with the lower and upper
    bounds ``-int beta_0 log F(rho_AB, R^[t](rho_A))`` and
    ``int beta_0 D_2(rho_AB || R^[t](rho_A))``.
    """
    rho_ab = check_density(rho_ab, "rho_AB")
    sigma_ab = check_psd(sigma_ab, "sigma_AB")
    if quad is None:
        quad = make_quadrature(0.0, DEFAULT_QUAD_TOL)
    rho_a = partial_trace(rho_ab, dims, 1)
    sigma_a = partial_trace(sigma_ab, dims, 1)
    d_joint = relative_entropy(rho_ab, sigma_ab)
    if math.isinf(d_joint):
        nan = float("nan")
        return RecoverabilityReport(math.inf, nan, nan, nan, nan, False, 0.0, 0.0,
                                    np.full_like(rho_ab, np.nan))
    delta = d_joint - relative_entropy(rho_a, sigma_a)
    stack = rotated_petz_partial_stack(sigma_ab, rho_a, dims, quad.nodes)
    wts = quad.density_weights
    recovered = hermitian_part(np.tensordot(wts, stack, axes=(0, 0)))
    dm = measured_relative_entropy(rho_ab, recovered, gtol=gtol)
    nlf = -math.log(fidelity(rho_ab, recovered))
    fid = _fidelity_stack(rho_ab, stack)
    lower_vals = -np.log(fid)
    upper_vals = _renyi2_stack(rho_ab, stack)
    lower = float(wts @ lower_vals)
    upper = float(wts @ upper_vals)
    qerr = quad.tail_bound * float(max(np.abs(lower_vals).max(), np.abs(upper_vals).max(), 1.0))
    slack = 0.0 if dm.converged else dm.grad_norm
    return RecoverabilityReport(delta, dm.value, nlf, lower, upper, dm.converged, qerr, slack, recovered)


@dataclass(frozen=True)
class CMIReport:
    cmi: float
    dm: float
    neg_log_f: float
    converged: bool
    recovered: np.ndarray = field(repr=False)

    def holds(self, tol: float = 1e-7) -> bool:
        return self.cmi >= max(self.dm, self.neg_log_f) - tol


def cmi_bound_report(rho_abc, dims: Sequence[int], quad: QuadratureRule | None = None) -> CMIReport:
    """I(A:C|B) against recovery of rho_ABC from rho_AB by R_{rho_BC, tr_C} on B."""
    rho_abc = check_density(rho_abc, "rho_ABC")
    dA, dB, dC = (int(d) for d in dims)
    rho_ab = partial_trace(rho_abc, dims, 2)
    rho_bc = partial_trace(rho_abc, dims, 0)
    sigma = kron(np.eye(dA), rho_bc)
    recovered = rotated_petz_partial(sigma, rho_ab, (dA * dB, dC), t=None, quad=quad)
    dm = measured_relative_entropy(rho_abc, recovered)
    nlf = -math.log(fidelity(rho_abc, recovered))
    return CMIReport(cond_mutual_info(rho_abc, dims), dm.value, nlf, dm.converged, recovered)
