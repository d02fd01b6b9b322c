"""
Spectral pinching maps and finite-m experiments with tensor powers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations_with_replacement
from typing import Sequence

import numpy as np
from scipy.special import sici

from .linalg import (
    check_psd,
    dagger,
    hermitian_eig,
    kron_power,
    log_schatten_norm,
    matrix_exp,
    matrix_log,
    support_threshold,
)

CLUSTER_RTOL = 1e-9
MAX_TENSOR_DIM = 1024


@dataclass(frozen=True)
class SpectralProjectors:
    distinct_eigenvalues: np.ndarray
    projectors: list = field(repr=False)
    cluster_tol: float

    def __len__(self) -> int:
        return len(self.projectors)


def cluster_eigenvalues(w: np.ndarray, cluster_tol: float = CLUSTER_RTOL) -> list[np.ndarray]:
    """Group ascending eigenvalues whose consecutive gaps are within tolerance.

    The tolerance is relative to ``max(|lambda|, 1)``.
    """
    scale = max(float(np.abs(w).max(initial=0.0)), 1.0)
    groups, start = [], 0
    for i in range(1, len(w) + 1):
        if i == len(w) or w[i] - w[i - 1] > cluster_tol * scale:
            groups.append(np.arange(start, i))
            start = i
    return groups


def spectral_projectors(A, cluster_tol: float = CLUSTER_RTOL) -> SpectralProjectors:
    w, V = hermitian_eig(A)
    groups = cluster_eigenvalues(w, cluster_tol)
    lam = np.array([w[g].mean() for g in groups])
    projs = [V[:, g] @ dagger(V[:, g]) for g in groups]
    return SpectralProjectors(lam, projs, cluster_tol)


def spec_size(A, cluster_tol: float = CLUSTER_RTOL) -> int:
    """|spec(A)|, the number of distinct eigenvalues after clustering."""
    return len(cluster_eigenvalues(hermitian_eig(A).eigenvalues, cluster_tol))


def _same_dim(A, X):
    A, X = np.asarray(A), np.asarray(X)
    if A.shape != X.shape:
        raise ValueError(f"dimension mismatch: {A.shape} vs {X.shape}")
    return A, X


def pinch(A, X, cluster_tol: float = CLUSTER_RTOL) -> np.ndarray:
    """P_A[X] = sum_lambda P_lambda X P_lambda."""
    A, X = _same_dim(A, X)
    sp = spectral_projectors(A, cluster_tol)
    return sum(P @ X @ P for P in sp.projectors)


def pinch_unitary_rep(A, X, cluster_tol: float = CLUSTER_RTOL) -> np.ndarray:
    """Pinching as the uniform average of ``U_y X U_y^dagger``.

    ``U_y = sum_z exp(2 pi i y z / k) P_z`` for ``k = |spec(A)|``.
    """
    A, X = _same_dim(A, X)
    sp = spectral_projectors(A, cluster_tol)
    k = len(sp)
    out = np.zeros_like(X, dtype=complex)
    for y in range(1, k + 1):
        U = sum(np.exp(2j * np.pi * y * z / k) * P for z, P in enumerate(sp.projectors, start=1))
        out += U @ X @ dagger(U)
    return out / k


def pinch_measure_density(delta: float, t):
    """mu(t) = (1 - cos(delta t / 2)) / (pi delta t^2 / 2), with mu(0) = delta / (4 pi)."""
    t = np.asarray(t, dtype=float)
    x = delta * t / 2.0
    with np.errstate(divide="ignore", invalid="ignore"):
        # 1 - cos x = 2 sin^2(x/2) avoids cancellation at small x
        out = 4.0 * np.sin(x / 2.0) ** 2 / (np.pi * delta * t**2)
    return np.where(t == 0.0, delta / (4.0 * np.pi), out)


def pinch_measure_tail(delta: float, T: float) -> float:
    """Exact mass of mu outside [-T, T]."""
    a = delta / 2.0
    si, _ = sici(a * T)
    one_side = (1.0 - math.cos(a * T)) / T + a * (math.pi / 2.0 - si)
    return 2.0 * (2.0 / (math.pi * delta)) * one_side


@dataclass(frozen=True)
class PinchMeasure:
    delta: float
    truncation: float
    spacing: float

    def density(self, t):
        return pinch_measure_density(self.delta, t)

    def tail_mass(self) -> float:
        return pinch_measure_tail(self.delta, self.truncation)


def _log_spectrum_gap(lam: np.ndarray) -> float:
    ll = np.log(lam)
    if len(ll) < 2:
        return math.inf
    return float(np.min(np.diff(ll)))


def pinch_integral_rep(A, X, truncation_tol: float = 1e-3,
                       cluster_tol: float = CLUSTER_RTOL) -> tuple[np.ndarray, float]:
    """Approximate ``P_A[X]`` by integrating ``A^{it} X A^{-it}`` against mu.

    ``A`` must be positive definite. ``delta`` is the smallest gap between
    distinct log-eigenvalues; the measure mu has Fourier transform equal to
    a triangle of half-width ``delta / 2``, which kills every off-diagonal
    block. Returns ``(approximation, error_bound)``. Diagonal blocks are
    exact (the integrand is constant there and mu has unit mass); the bound
    covers the truncated oscillatory tails of the off-diagonal blocks.
    """
    A, X = _same_dim(A, X)
    w, V = hermitian_eig(A)
    if w[0] <= support_threshold(w):
        raise ValueError("integral representation needs a positive definite matrix")
    groups = cluster_eigenvalues(w, cluster_tol)
    lam = np.array([w[g].mean() for g in groups])
    Xt = dagger(V) @ X @ V
    xmax = max(float(np.abs(X).max()), 1.0)
    if len(lam) == 1:
        return X.astype(complex), 0.0
    delta = _log_spectrum_gap(lam)
    if not delta > 0.0:
        raise ValueError("log-eigenvalues are not distinct; mu is undefined")
    lw = np.log(np.repeat(lam, [len(g) for g in groups]))
    T = max(64.0 / delta, 2.0 * xmax / (truncation_tol * delta))
    h = min(0.1, math.pi / (4.0 * max(float(np.abs(lw).max()), 1e-300)))
    n = int(math.ceil(T / h))
    h = T / n
    t = h * np.arange(-n, n + 1)
    wts = np.full(t.shape, h)
    wts[0] = wts[-1] = h / 2.0
    mw = wts * pinch_measure_density(delta, t)
    omega = lw[:, None] - lw[None, :]
    iu = np.triu_indices(len(lw), 1)
    kern = np.eye(len(lw), dtype=complex)
    vals = np.exp(1j * np.outer(t, omega[iu])).T @ mw
    kern[iu] = vals
    kern[(iu[1], iu[0])] = vals.conj()
    # Within a block the integrand is constant and mu has unit mass.
    same = np.abs(omega) < 0.5 * delta
    kern[same] = 1.0
    out = V @ (kern * Xt) @ dagger(V)
    # Off-diagonal tails: every frequency in (1 - cos(delta t / 2)) e^{i omega t}
    # is at least delta / 2, and integrating by parts against 1/t^2 bounds
    # the missing part by 32 / (pi delta^2 T^2). The trapezoid sum itself is
    # exact up to truncation because mu has a compactly supported Fourier
    # transform and h is below the aliasing limit.
    osc = 32.0 / (math.pi * delta**2 * T**2)
    err = osc * float(np.abs(Xt).max()) * len(lw)
    return out, err


def pinching_inequality_check(A, X, cluster_tol: float = CLUSTER_RTOL) -> float:
    """Smallest eigenvalue of ``P_A[X] - X / |spec(A)|`` (non-negative for X >= 0)."""
    k = spec_size(A, cluster_tol)
    D = pinch(A, X, cluster_tol) - np.asarray(X) / k
    return float(hermitian_eig(D).eigenvalues[0])


def spec_count_bound(d: int, m: int) -> int:
    """Number of types of length-m sequences over d symbols, C(m+d-1, d-1)."""
    if d < 1 or m < 1:
        raise ValueError("d and m must be positive")
    return math.comb(m + d - 1, d - 1)


def tensor_power_spectrum(A, m: int, cluster_tol: float = CLUSTER_RTOL) -> np.ndarray:
    """Distinct eigenvalues of A^{(x)m}, enumerated from multisets of eigenvalues."""
    w = hermitian_eig(A).eigenvalues
    prods = np.sort([math.prod(c) for c in combinations_with_replacement(w, m)])
    groups = cluster_eigenvalues(prods, cluster_tol)
    return np.array([prods[g].mean() for g in groups])


def _check_tensor_dim(d: int, m: int) -> None:
    if d**m > MAX_TENSOR_DIM:
        raise ValueError(f"tensor power dimension {d}**{m} exceeds {MAX_TENSOR_DIM}")


@dataclass(frozen=True)
class QuasiConvexityReport:
    p: float
    m: int
    lhs: float
    rhs: float
    slack: float
    holds: bool


def quasi_convexity_check(p: float, weights: Sequence[float], matrices: Sequence, m: int,
                          atol: float = 1e-12) -> QuasiConvexityReport:
    """Asymptotic convexity of Schatten quasi-norms on tensor powers.

    ``lhs = (1/m) log ||sum_x w_x A_x^{(x)m}||_p`` and
    ``rhs = (1/m) log sum_x w_x ||A_x^{(x)m}||_p + (1/m) ((1-p)/p) log K(m)``
    with ``K(m) = C(m + d^2 - 1, d^2 - 1)``.
    """
    if not 0.0 < p < 1.0:
        raise ValueError("p must lie in (0, 1)")
    weights = np.asarray(weights, dtype=float)
    if np.any(weights < 0) or abs(weights.sum() - 1.0) > 1e-12:
        raise ValueError("weights must form a probability vector")
    mats = [check_psd(A, "A_x") for A in matrices]
    if len(mats) != len(weights):
        raise ValueError("one weight per matrix")
    d = mats[0].shape[0]
    _check_tensor_dim(d, m)
    powers = [kron_power(A, m) for A in mats]
    mix = sum(wx * P for wx, P in zip(weights, powers))
    lhs = float(log_schatten_norm(mix, p)) / m
    norms = np.exp([float(log_schatten_norm(P, p)) for P in powers])
    K = math.comb(m + d * d - 1, d * d - 1)
    slack = ((1.0 - p) / p) * math.log(K) / m
    rhs = math.log(float(weights @ norms)) / m + slack
    return QuasiConvexityReport(p, m, lhs, rhs, slack, lhs <= rhs + atol)


@dataclass(frozen=True)
class PinchDemoRow:
    m: int
    value: float
    lower: float
    upper: float


def tensor_pinch_gt_demo(A, B, m: int) -> PinchDemoRow:
    """One step of the pinching proof of Golden-Thompson at finite ``m``.

    ``value = (1/m) log tr exp(log P_{B^m}[A^m] + log B^m)``, which equals
    ``log tr AB`` because the pinched matrix commutes with ``B^m``;
    ``lower = log tr exp(log A + log B)`` and
    ``upper = value + (1/m) log |spec(B^m)|``. The pinching inequality gives
    ``lower <= upper``, and ``upper`` decreases to ``log tr AB`` as m grows.
    """
    A, B = check_psd(A, "A"), check_psd(B, "B")
    d = A.shape[0]
    _check_tensor_dim(d, m)
    Am, Bm = kron_power(A, m), kron_power(B, m)
    logB = matrix_log(Bm)
    pinched = pinch(Bm, Am)
    value = math.log(np.trace(matrix_exp(matrix_log(pinched) + logB)).real) / m
    lower = math.log(np.trace(matrix_exp(matrix_log(A) + matrix_log(B))).real)
    upper = value + math.log(spec_size(Bm)) / m
    return PinchDemoRow(m, value, lower, upper)
