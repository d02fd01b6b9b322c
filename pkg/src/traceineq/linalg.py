"""
Dense complex linear algebra and spectral calculus.

Every matrix is a plain 2-D ``numpy.ndarray``. Hermitian inputs are
symmetrized before decomposition, and functions of positive semi-definite
matrices act on the support only: eigenvalues at or below the support
threshold are treated as exact zeros, so that ``0**z == 0`` and
``log(0) == 0``.
"""

from __future__ import annotations

from typing import Callable, NamedTuple, Sequence

import numpy as np
import scipy.linalg

from .densities import make_quadrature

HERMITIAN_TOL = 1e-10
PSD_TOL = 1e-10
SUPPORT_RTOL = 1e-12
DEGENERACY_RTOL = 1e-8


class DomainError(ValueError):
    """A matrix function was evaluated outside its domain."""


class HermitianEig(NamedTuple):
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def _as_square(A) -> np.ndarray:
    A = np.asarray(A)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix has non-finite entries")
    return A.astype(complex, copy=False)


def dagger(A: np.ndarray) -> np.ndarray:
    return np.swapaxes(A, -1, -2).conj()


def hermitian_part(L) -> np.ndarray:
    """(L + L^dagger) / 2."""
    L = _as_square(L)
    return 0.5 * (L + dagger(L))


def antihermitian_part(L) -> np.ndarray:
    """(L - L^dagger) / (2i), a Hermitian matrix with L = Re(L) + i Im(L)."""
    L = _as_square(L)
    return (L - dagger(L)) / 2j


def is_hermitian(A, tol: float = HERMITIAN_TOL) -> bool:
    A = np.asarray(A)
    scale = max(1.0, float(np.abs(A).max(initial=0.0)))
    return bool(np.abs(A - dagger(A)).max(initial=0.0) <= tol * scale)


def support_threshold(eigenvalues: np.ndarray) -> float:
    """Eigenvalues at or below this value count as zero."""
    return SUPPORT_RTOL * max(float(np.abs(eigenvalues).max(initial=0.0)), 1.0)


def hermitian_eig(A) -> HermitianEig:
    """Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.

    Raises ``ValueError`` for non-square, non-finite or non-Hermitian input.
    """
    A = _as_square(A)
    if not is_hermitian(A):
        raise ValueError("matrix is not Hermitian")
    w, V = np.linalg.eigh(0.5 * (A + dagger(A)))
    return HermitianEig(w, V)


def is_psd(A, tol: float = PSD_TOL) -> bool:
    A = _as_square(A)
    if not is_hermitian(A):
        return False
    w = hermitian_eig(A).eigenvalues
    return bool(w[0] >= -tol * max(float(np.abs(w).max()), 1.0))


def check_psd(A, name: str = "matrix") -> np.ndarray:
    A = _as_square(A)
    if not is_psd(A):
        raise ValueError(f"{name} is not positive semi-definite")
    return A


def support_rank(A) -> int:
    w = hermitian_eig(A).eigenvalues
    return int(np.count_nonzero(w > support_threshold(w)))


def support_projector(A) -> np.ndarray:
    w, V = hermitian_eig(A)
    Vs = V[:, w > support_threshold(w)]
    return Vs @ dagger(Vs)


def from_eig(w: np.ndarray, V: np.ndarray) -> np.ndarray:
    return (V * w) @ dagger(V)


def matrix_fn(A, f: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
    """Apply a scalar function through the spectral decomposition of ``A``.

    ``f`` receives the real eigenvalue vector and must return finite values;
    anything else is reported as a :class:`DomainError`.
    """
    w, V = hermitian_eig(A)
    with np.errstate(all="ignore"):
        fw = np.asarray(f(w))
    if not np.all(np.isfinite(fw)):
        raise DomainError("function undefined at an eigenvalue")
    return from_eig(fw, V)


def _psd_eig(A):
    w, V = hermitian_eig(A)
    thr = support_threshold(w)
    if w[0] < -PSD_TOL * max(float(np.abs(w).max()), 1.0):
        raise DomainError("matrix is not positive semi-definite")
    return w, V, w > thr


def complex_power(A, z: complex) -> np.ndarray:
    """A**z on the support of ``A`` (zero eigenvalues map to zero)."""
    w, V, on = _psd_eig(A)
    wz = np.zeros(w.shape, dtype=complex)
    wz[on] = np.exp(z * np.log(w[on]))
    return from_eig(wz, V)


def matrix_exp(H) -> np.ndarray:
    return matrix_fn(H, np.exp)


def matrix_log(A) -> np.ndarray:
    """Logarithm on the support; zero eigenvalues map to zero."""
    w, V, on = _psd_eig(A)
    lw = np.zeros_like(w)
    lw[on] = np.log(w[on])
    return from_eig(lw, V)


def expm(L) -> np.ndarray:
    """Exponential of a general square matrix (or a stack of them)."""
    return scipy.linalg.expm(np.asarray(L, dtype=complex))


def abs_value(L) -> np.ndarray:
    """|L| = sqrt(L^dagger L), built from the singular value decomposition."""
    L = _as_square(L)
    _, s, Vh = np.linalg.svd(L)
    return (dagger(Vh) * s) @ Vh


def singular_values(L) -> np.ndarray:
    return np.linalg.svd(np.asarray(L), compute_uv=False)


def _check_p(p: float) -> float:
    p = float(p)
    if not p > 0:
        raise ValueError(f"Schatten index must be positive, got {p}")
    return p


def schatten_from_singular(s: np.ndarray, p: float) -> np.ndarray:
    """Schatten (quasi-)norm from singular values along the last axis."""
    p = _check_p(p)
    s = np.asarray(s, dtype=float)
    if np.isinf(p):
        return s.max(axis=-1)
    return np.sum(s**p, axis=-1) ** (1.0 / p)


def log_schatten_from_singular(s: np.ndarray, p: float) -> np.ndarray:
    """log of the Schatten norm, scaled to avoid overflow."""
    p = _check_p(p)
    s = np.asarray(s, dtype=float)
    smax = s.max(axis=-1)
    with np.errstate(divide="ignore", invalid="ignore"):
        logmax = np.log(smax)
        if np.isinf(p):
            return logmax
        ratio = s / np.where(smax > 0, smax, 1.0)[..., None]
        return logmax + np.log(np.sum(ratio**p, axis=-1)) / p


def schatten_norm(L, p: float) -> float:
    """(sum_i s_i**p)**(1/p) over the singular values; ``p=inf`` is the operator norm."""
    _check_p(p)
    return float(schatten_from_singular(singular_values(_as_square(L)), p))


def log_schatten_norm(L, p: float) -> np.ndarray:
    """log ||L||_p for a matrix or a stack of matrices."""
    return log_schatten_from_singular(np.linalg.svd(np.asarray(L), compute_uv=False), p)


def _log_divided(w: np.ndarray) -> np.ndarray:
    li = np.log(w)
    dw = w[:, None] - w[None, :]
    near = np.abs(dw) <= DEGENERACY_RTOL * np.abs(w)[:, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        K = (li[:, None] - li[None, :]) / dw
    return np.where(near, 1.0 / w[:, None], K)


def frechet_dlog_divided(A, H) -> np.ndarray:
    """Frechet derivative of log at a positive definite ``A`` in direction ``H``.

    Uses the Daleckii-Krein formula with first divided differences of log in
    the eigenbasis of ``A``.
    """
    w, V = hermitian_eig(A)
    if w[0] <= support_threshold(w):
        raise DomainError("matrix is singular")
    Ht = dagger(V) @ hermitian_part(H) @ V
    return V @ (_log_divided(w) * Ht) @ dagger(V)


def frechet_dlog_beta(A, H, quad=None) -> np.ndarray:
    """Frechet derivative of log as an average of rotated inverse square roots.

    Integrates ``A^{-1/2 - it/2} H A^{-1/2 + it/2}`` against the ``beta_0``
    density with the quadrature rule ``quad`` (``make_quadrature(0, 1e-12)``
    by default).
    """
    if quad is None:
        quad = make_quadrature(0.0, 1e-12)
    if quad.theta != 0.0:
        raise ValueError("the logarithm derivative needs the beta_0 rule")
    w, V = hermitian_eig(A)
    if w[0] <= support_threshold(w):
        raise DomainError("matrix is singular")
    Ht = dagger(V) @ hermitian_part(H) @ V
    lw = np.log(w)
    t = quad.nodes
    # left and right factors as diagonals, one row per node
    left = np.exp(np.outer(-0.5 - 0.5j * t, lw))
    right = np.exp(np.outer(-0.5 + 0.5j * t, lw))
    kernel = np.einsum("n,ni,nj->ij", quad.density_weights, left, right)
    out = V @ (kernel * Ht) @ dagger(V)
    return hermitian_part(out)


def frechet_dexp(H, E) -> np.ndarray:
    """Frechet derivative of exp at Hermitian ``H`` in direction ``E``."""
    w, V = hermitian_eig(H)
    Et = dagger(V) @ hermitian_part(E) @ V
    dw = w[:, None] - w[None, :]
    ew = np.exp(w)
    near = np.abs(dw) <= DEGENERACY_RTOL * np.maximum(np.abs(w)[:, None], 1.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        K = np.exp(w)[None, :] * np.expm1(dw) / dw
    K = np.where(near, ew[:, None], K)
    return V @ (K * Et) @ dagger(V)


def kron(*mats) -> np.ndarray:
    out = np.ones((1, 1), dtype=complex)
    for M in mats:
        out = np.kron(out, np.asarray(M))
    return out


def kron_power(A, m: int) -> np.ndarray:
    return kron(*([A] * m))


_LETTERS = "ABCDEFGH"


def partial_trace(M, dims: Sequence[int], which) -> np.ndarray:
    """Trace out the subsystems listed in ``which``.

    ``which`` is an index, a letter (``"A"`` is subsystem 0) or a sequence of
    either. Subsystem ordering follows ``dims`` and ``numpy.kron``.
    """
    M = _as_square(M)
    dims = [int(d) for d in dims]
    if int(np.prod(dims)) != M.shape[0]:
        raise ValueError(f"dims {dims} do not match matrix dimension {M.shape[0]}")
    if isinstance(which, (str, int, np.integer)):
        which = [which]
    idx = sorted({_LETTERS.index(w) if isinstance(w, str) else int(w) for w in which})
    if any(i < 0 or i >= len(dims) for i in idx):
        raise ValueError(f"subsystem out of range for dims {dims}")
    n = len(dims)
    T = M.reshape(dims + dims)
    for k, i in enumerate(idx):
        ax = i - k
        T = np.trace(T, axis1=ax, axis2=ax + n - k)
    keep = [d for i, d in enumerate(dims) if i not in idx]
    size = int(np.prod(keep)) if keep else 1
    return T.reshape(size, size)


def to_json(A) -> dict:
    """Matrix JSON: ``{"dim": n, "re": [[...]], "im": [[...]]}``, row-major."""
    A = _as_square(A)
    return {"dim": int(A.shape[0]), "re": A.real.tolist(), "im": A.imag.tolist()}


def from_json(obj: dict) -> np.ndarray:
    re = np.asarray(obj["re"], dtype=float)
    im = np.asarray(obj.get("im", np.zeros_like(re)), dtype=float)
    A = re + 1j * im
    if A.shape != (obj["dim"], obj["dim"]):
        raise ValueError("matrix JSON dim does not match entries")
    return _as_square(A)
