"""
Evaluators for both sides of the Golden-Thompson and Araki-Lieb-Thirring
families of trace inequalities.

Every evaluator returns an :class:`InequalityReport` on a log scale with
``gap = rhs_log - lhs_log``; an inequality instance holds when
``gap >= -(quad_error + atol)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.linalg

from .densities import QuadratureError, QuadratureRule, integrate_beta, make_quadrature
from .linalg import (
    DomainError,
    abs_value,
    antihermitian_part,
    check_psd,
    complex_power,
    dagger,
    expm,
    hermitian_eig,
    hermitian_part,
    is_hermitian,
    is_psd,
    log_schatten_norm,
    matrix_exp,
    matrix_log,
    support_threshold,
)

DEFAULT_QUAD_TOL = 1e-10
DEFAULT_MAX_ERROR = 1e-6


@dataclass(frozen=True)
class InequalityReport:
    lhs_log: float
    rhs_log: float
    quad_error: float = 0.0
    params: dict = field(default_factory=dict)

    @property
    def gap(self) -> float:
        return self.rhs_log - self.lhs_log

    def holds(self, atol: float = 1e-9) -> bool:
        return bool(self.gap >= -(self.quad_error + atol))

    def as_row(self) -> dict:
        return {"lhs": self.lhs_log, "rhs": self.rhs_log, "gap": self.gap, "quad_error": self.quad_error}


class MatrixTuple(tuple):
    """An ordered tuple of equally sized square matrices of one kind."""

    KINDS = ("hermitian", "psd", "general")

    def __new__(cls, matrices, kind: str = "general"):
        if kind not in cls.KINDS:
            raise ValueError(f"kind must be one of {cls.KINDS}")
        mats = [np.asarray(M, dtype=complex) for M in matrices]
        if not mats:
            raise ValueError("need at least one matrix")
        shape = mats[0].shape
        if len(shape) != 2 or shape[0] != shape[1] or any(M.shape != shape for M in mats):
            raise ValueError("matrices must be square and of equal size")
        if kind == "hermitian" and not all(is_hermitian(M) for M in mats):
            raise ValueError("matrices are not all Hermitian")
        if kind == "psd" and not all(is_psd(M) for M in mats):
            raise ValueError("matrices are not all positive semi-definite")
        self = super().__new__(cls, mats)
        self.kind = kind
        return self

    @property
    def dim(self) -> int:
        return self[0].shape[0]


def _quad(theta: float, quad: QuadratureRule | None) -> QuadratureRule:
    if quad is None:
        return make_quadrature(theta, DEFAULT_QUAD_TOL) if theta < 1.0 else make_quadrature(1.0)
    if quad.theta != theta:
        raise ValueError(f"quadrature was built for theta={quad.theta}, need {theta}")
    return quad


def _check_cert(res, max_error: float | None) -> None:
    if not math.isfinite(res.error) or (max_error is not None and res.error > max_error):
        raise QuadratureError(f"quadrature certificate {res.error:.3e} exceeds {max_error}")


def _log_tr(M) -> float:
    tr = np.trace(M)
    return math.log(tr.real)


def _stacked_powers(eigs, z: np.ndarray) -> np.ndarray:
    """For each z, V diag(exp(z * lw)) V^dagger; lw = -inf entries map to 0."""
    lw, V = eigs
    with np.errstate(all="ignore"):
        diag = np.exp(np.multiply.outer(z, lw))
    diag = np.where(np.isfinite(lw), diag, 0.0)
    return np.einsum("ij,nj,kj->nik", V, diag, V.conj())


def _product(stack_list) -> np.ndarray:
    out = stack_list[0]
    for S in stack_list[1:]:
        out = out @ S
    return out


def _log_eigs(A):
    """Eigenvectors and log-eigenvalues (``-inf`` off the support)."""
    w, V = hermitian_eig(A)
    lw = np.full(w.shape, -np.inf)
    on = w > support_threshold(w)
    lw[on] = np.log(w[on])
    return lw, V


def gt_classic(H1, H2) -> InequalityReport:
    """tr exp(H1 + H2) <= tr exp(H1) exp(H2)."""
    lhs = _log_tr(matrix_exp(hermitian_part(H1) + hermitian_part(H2)))
    rhs = _log_tr(matrix_exp(H1) @ matrix_exp(H2))
    return InequalityReport(lhs, rhs, 0.0, {"n": 2, "p": 2})


def alt_classic(A1, A2, q: float, r: float) -> InequalityReport:
    """tr (A1^{r/2} A2^r A1^{r/2})^{q/r} <= tr (A1^{1/2} A2 A1^{1/2})^q for r in (0, 1]."""
    if not q > 0:
        raise ValueError("q must be positive")
    if not 0.0 < r <= 1.0:
        raise ValueError("r must lie in (0, 1]")
    A1, A2 = check_psd(A1, "A1"), check_psd(A2, "A2")
    half_r = complex_power(A1, r / 2)
    inner_l = hermitian_part(half_r @ complex_power(A2, r) @ half_r)
    half = complex_power(A1, 0.5)
    inner_r = hermitian_part(half @ A2 @ half)
    lhs = _log_tr(complex_power(_clip_psd(inner_l), q / r))
    rhs = _log_tr(complex_power(_clip_psd(inner_r), q))
    return InequalityReport(lhs, rhs, 0.0, {"n": 2, "q": q, "r": r})


def _clip_psd(M):
    w, V = hermitian_eig(M)
    return (V * np.clip(w, 0.0, None)) @ dagger(V)


def gt_multi_integrand(Hs, p: float, t) -> np.ndarray:
    """log || prod_k exp((1 + i t) H_k) ||_p on an array of ``t``."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    z = 1.0 + 1j * t
    stacks = [_stacked_powers(hermitian_eig(hermitian_part(H)), z) for H in Hs]
    return log_schatten_norm(_product(stacks), p)


def gt_multi(Hs: Sequence, p: float = 2.0, quad: QuadratureRule | None = None,
             max_error: float | None = DEFAULT_MAX_ERROR) -> InequalityReport:
    """log||exp(sum H_k)||_p <= int beta_0(t) log||prod exp((1+it) H_k)||_p dt."""
    if p < 1:
        raise ValueError("p must be at least 1")
    Hs = MatrixTuple(Hs, "hermitian")
    quad = _quad(0.0, quad)
    lhs = float(log_schatten_norm(matrix_exp(sum(hermitian_part(H) for H in Hs)), p))
    res = integrate_beta(0.0, lambda t: gt_multi_integrand(Hs, p, t), quad, vectorized=True)
    _check_cert(res, max_error)
    return InequalityReport(lhs, float(res.value), res.error,
                            {"n": len(Hs), "p": p, "dim": Hs.dim, "quad_tol": quad.tol})


def alt_multi_integrand(As, p: float, t) -> np.ndarray:
    """log || prod_k A_k^{1 + i t} ||_p on an array of ``t``."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    z = 1.0 + 1j * t
    stacks = [_stacked_powers(_log_eigs(A), z) for A in As]
    return log_schatten_norm(_product(stacks), p)


def alt_multi(As: Sequence, p: float = 2.0, r: float = 0.5,
              quad: QuadratureRule | None = None,
              max_error: float | None = DEFAULT_MAX_ERROR) -> InequalityReport:
    """log|| |prod A_k^r|^{1/r} ||_p <= int beta_r(t) log||prod A_k^{1+it}||_p dt."""
    if p < 1:
        raise ValueError("p must be at least 1")
    if not 0.0 < r <= 1.0:
        raise ValueError("r must lie in (0, 1]")
    As = MatrixTuple(As, "psd")
    quad = _quad(r, quad)
    prod_r = _product([complex_power(A, r) for A in As])
    # || |X|^{1/r} ||_p = ||X||_{p/r}^{1/r}
    lhs = float(log_schatten_norm(prod_r, p / r)) / r
    res = integrate_beta(r, lambda t: alt_multi_integrand(As, p, t), quad, vectorized=True)
    _check_cert(res, max_error)
    return InequalityReport(lhs, float(res.value), res.error,
                            {"n": len(As), "p": p, "r": r, "dim": As.dim, "quad_tol": quad.tol})


def default_sup_grid() -> np.ndarray:
    return np.round(np.arange(-100, 101) * 0.1, 10)


def alt_sup_form(As: Sequence, p: float = 2.0, r: float = 0.5, t_grid=None) -> InequalityReport:
    """Grid version of the supremum form of the multivariate ALT inequality.

    ``rhs = max_t log||prod_k A_k^{1 + i t_k}||_p``. The first and last
    phases only multiply by unitaries, so a 1-D ``t_grid`` is expanded into
    the product grid over the ``n - 2`` interior factors (outer phases zero);
    a 2-D ``t_grid`` of shape ``(G, n)`` lists explicit points. A grid
    maximum only lower-bounds the true supremum, which the report records
    under ``params["rhs_is_grid_lower_bound"]``.
    """
    if not p > 0:
        raise ValueError("p must be positive")
    if not 0.0 < r <= 1.0:
        raise ValueError("r must lie in (0, 1]")
    As = MatrixTuple(As, "psd")
    n = len(As)
    grid = default_sup_grid() if t_grid is None else np.asarray(t_grid, dtype=float)
    if grid.size == 0:
        raise ValueError("empty grid")
    if grid.ndim == 1:
        inner = max(n - 2, 0)
        if inner == 0:
            points = np.zeros((1, n))
        else:
            mesh = np.meshgrid(*([grid] * inner), indexing="ij")
            points = np.zeros((mesh[0].size, n))
            for k, M in enumerate(mesh, start=1):
                points[:, k] = M.ravel()
    else:
        points = grid
        if points.shape[1] != n:
            raise ValueError(f"grid points need {n} coordinates")
    eigs = [_log_eigs(A) for A in As]
    stacks = [_stacked_powers(e, 1.0 + 1j * points[:, k]) for k, e in enumerate(eigs)]
    profile = log_schatten_norm(_product(stacks), p)
    prod_r = _product([complex_power(A, r) for A in As])
    lhs = float(log_schatten_norm(prod_r, p / r)) / r
    i = int(np.argmax(profile))
    return InequalityReport(lhs, float(profile[i]), 0.0, {
        "n": n, "p": p, "r": r, "argmax": points[i].tolist(),
        "rhs_is_grid_lower_bound": True, "profile": profile, "points": points,
    })


def gt_general(Ls: Sequence, p: float = 2.0, quad: QuadratureRule | None = None,
               max_error: float | None = DEFAULT_MAX_ERROR) -> InequalityReport:
    """GT for square matrices with Re(L_k) = (L_k + L_k^dagger) / 2 on the right side."""
    if p < 1:
        raise ValueError("p must be at least 1")
    Ls = MatrixTuple(Ls, "general")
    quad = _quad(0.0, quad)
    lhs = float(log_schatten_norm(expm(sum(Ls)), p))
    re = [hermitian_part(L) for L in Ls]
    res = integrate_beta(0.0, lambda t: gt_multi_integrand(re, p, t), quad, vectorized=True)
    _check_cert(res, max_error)
    return InequalityReport(lhs, float(res.value), res.error,
                            {"n": len(Ls), "p": p, "dim": Ls.dim, "quad_tol": quad.tol})


def alt_general_integrand(Ls, p: float, r: float, t) -> np.ndarray:
    t = np.atleast_1d(np.asarray(t, dtype=float))
    z = (1.0 + 1j * t)[:, None, None]
    # exp(i r Im L) keeps the factors unitary on the line Re z = 0
    factors = [expm(z * hermitian_part(L) + 1j * r * antihermitian_part(L)) for L in Ls]
    return log_schatten_norm(_product(factors), p)


def alt_general(Ls: Sequence, p: float = 2.0, r: float = 0.5,
                quad: QuadratureRule | None = None,
                max_error: float | None = DEFAULT_MAX_ERROR) -> InequalityReport:
    """ALT form for general square matrices.

    ``lhs = log || |prod_k exp(r L_k)|^{1/r} ||_p`` and
    ``rhs = int beta_r(t) log || prod_k exp((1+it) Re L_k + i r Im L_k) ||_p dt``.
    As r -> 0 the left side tends to ``log ||exp(sum L_k)||_p`` (Lie-Trotter)
    and the right side to the one of :func:`gt_general`.
    """
    if p < 1:
        raise ValueError("p must be at least 1")
    if not 0.0 < r < 1.0:
        raise ValueError("r must lie in (0, 1)")
    Ls = MatrixTuple(Ls, "general")
    quad = _quad(r, quad)
    lhs = float(log_schatten_norm(_product([expm(r * L) for L in Ls]), p / r)) / r
    res = integrate_beta(r, lambda t: alt_general_integrand(Ls, p, r, t), quad, vectorized=True)
    _check_cert(res, max_error)
    return InequalityReport(lhs, float(res.value), res.error,
                            {"n": len(Ls), "p": p, "r": r, "dim": Ls.dim, "quad_tol": quad.tol})


def normal_pair_check(N1, N2, p: float = 2.0) -> InequalityReport:
    """||exp(N1 + N2)||_p <= || |exp N1| |exp N2| ||_p for normal N1, N2."""
    lhs = float(log_schatten_norm(expm(np.asarray(N1) + np.asarray(N2)), p))
    rhs = float(log_schatten_norm(abs_value(expm(N1)) @ abs_value(expm(N2)), p))
    return InequalityReport(lhs, rhs, 0.0, {"n": 2, "p": p})


def lie_trotter(Ls: Sequence, r: float) -> np.ndarray:
    """(prod_k exp(r L_k))^{1/r}.

    For Hermitian inputs the power is taken as ``|prod exp(r H_k)|^{1/r}``,
    which is positive definite; otherwise the principal power of the product
    is used.
    """
    if not r > 0:
        raise ValueError("r must be positive")
    Ls = MatrixTuple(Ls, "general")
    if all(is_hermitian(L) for L in Ls):
        prod = _product([matrix_exp(r * hermitian_part(L)) for L in Ls])
        return complex_power(abs_value(prod), 1.0 / r)
    prod = _product([expm(r * L) for L in Ls])
    return expm(scipy.linalg.logm(prod) / r)


def _trace_kernel_form(H1, H2, H3, kernel_fn) -> tuple[float, float]:
    lw, V = hermitian_eig(H2)
    B1 = dagger(V) @ matrix_exp(H1) @ V
    B3 = dagger(V) @ matrix_exp(H3) @ V
    K = kernel_fn(lw)
    val = np.sum(B1 * B3.T * K)
    return val.real, val.imag


def _lieb_kernel(mu: np.ndarray) -> np.ndarray:
    # int_0^inf (x_i + s)^{-1} (x_j + s)^{-1} ds = log(x_j / x_i) / (x_j - x_i), x = exp(-mu)
    x = np.exp(-mu)
    num = -(mu[None, :] - mu[:, None])
    den = x[None, :] - x[:, None]
    near = np.abs(den) <= 1e-8 * x[:, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        K = num / den
    return np.where(near, 1.0 / x[:, None], K)


def lieb_triple_rhs(H1, H2, H3) -> float:
    """int_0^inf tr e^{H1} (e^{-H2} + s)^{-1} e^{H3} (e^{-H2} + s)^{-1} ds in closed form."""
    re, _ = _trace_kernel_form(H1, H2, H3, _lieb_kernel)
    return float(re)


def our_gt3_integrand(H1, H2, H3, t) -> np.ndarray:
    """tr e^{H1} e^{(1+it) H2 / 2} e^{H3} e^{(1-it) H2 / 2} on an array of t (real valued)."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    lw, V = hermitian_eig(H2)
    E1, E3 = matrix_exp(H1), matrix_exp(H3)
    plus = _stacked_powers((lw, V), (1.0 + 1j * t) / 2.0)
    minus = _stacked_powers((lw, V), (1.0 - 1j * t) / 2.0)
    vals = np.trace(E1[None] @ plus @ E3[None] @ minus, axis1=1, axis2=2)
    if np.any(np.abs(vals.imag) > 1e-10 * np.maximum(np.abs(vals), 1.0)):
        raise ArithmeticError("triple-matrix integrand has a non-negligible imaginary part")
    return vals.real


def our_gt3_rhs(H1, H2, H3, quad: QuadratureRule | None = None) -> float:
    """int beta_0(t) tr e^{H1} e^{(1+it) H2/2} e^{H3} e^{(1-it) H2/2} dt."""
    quad = _quad(0.0, quad)
    res = integrate_beta(0.0, lambda t: our_gt3_integrand(H1, H2, H3, t), quad, vectorized=True)
    return float(res.value)


def peierls_bogoliubov_check(G1, G2, normalize: bool = True) -> float:
    """(-tr G2 e^{G1}) - (-log tr e^{G1 + G2}).

    The inequality ``-tr G2 e^{G1} >= -log tr e^{G1+G2}`` is meant for
    ``tr e^{G1} = 1``; with ``normalize=True`` (the default) G1 is shifted
    by ``-log tr e^{G1}`` first. A non-negative return value means it holds.
    """
    G1, G2 = hermitian_part(G1), hermitian_part(G2)
    if normalize:
        G1 = G1 - math.log(np.trace(matrix_exp(G1)).real) * np.eye(G1.shape[0])
    lhs = -np.trace(G2 @ matrix_exp(G1)).real
    rhs = -math.log(np.trace(matrix_exp(G1 + G2)).real)
    return float(lhs - rhs)


# Counterexample matrices. Set 1 is the first example with its middle matrix
# taken positive definite (see ``EX_MAT1_A2_AS_PRINTED``); set 2 is verbatim.
EX_MAT1 = (
    np.array([[5, 2], [2, 1]], dtype=complex) / 4,
    np.array([[1, -2], [-2, 8]], dtype=complex) / 4,
    np.array([[8, -2], [-2, 1]], dtype=complex) / 4,
)
EX_MAT1_A2_AS_PRINTED = np.array([[1, -2], [-2, 2]], dtype=complex) / 4
EX_MAT2 = (
    np.array([[4, 2 - 1j], [2 + 1j, 3]], dtype=complex) / 8,
    np.array([[15, -5 - 3j], [-5 + 3j, 12]], dtype=complex) / 60,
    np.array([[15, 10 - 5j], [10 + 5j, 11]], dtype=complex) / 20,
)
COUNTEREXAMPLES = {1: EX_MAT1, 2: EX_MAT2}


def _check_pd(A, name):
    w = hermitian_eig(A).eigenvalues
    if w[0] <= support_threshold(w):
        raise DomainError(f"{name} is not positive definite")


def gamma_curve(A1, A2, A3, t) -> np.ndarray:
    """gamma(t) = tr A3^{1/2} A2^{(1+it)/2} A1 A2^{(1-it)/2} A3^{1/2} on an array of t."""
    for A, name in ((A1, "A1"), (A2, "A2"), (A3, "A3")):
        _check_pd(A, name)
    t = np.atleast_1d(np.asarray(t, dtype=float))
    e2 = _log_eigs(A2)
    s3 = complex_power(A3, 0.5)
    plus = _stacked_powers(e2, (1.0 + 1j * t) / 2.0)
    minus = _stacked_powers(e2, (1.0 - 1j * t) / 2.0)
    vals = np.trace(s3[None] @ plus @ np.asarray(A1)[None] @ minus @ s3[None], axis1=1, axis2=2)
    if np.any(np.abs(vals.imag) > 1e-10 * np.abs(vals)):
        raise ArithmeticError("gamma(t) has a non-negligible imaginary part")
    return vals.real


def kappa(A1, A2, A3) -> float:
    """tr exp(log A1 + log A2 + log A3)."""
    for A, name in ((A1, "A1"), (A2, "A2"), (A3, "A3")):
        _check_pd(A, name)
    return float(np.trace(matrix_exp(matrix_log(A1) + matrix_log(A2) + matrix_log(A3))).real)


def gamma_kappa(A1, A2, A3, t: float) -> tuple[float, float]:
    return float(gamma_curve(A1, A2, A3, t)[0]), kappa(A1, A2, A3)


def gamma_average(A1, A2, A3, quad: QuadratureRule | None = None) -> float:
    """xi = int beta_0(t) gamma(t) dt."""
    quad = _quad(0.0, quad)
    return float(integrate_beta(0.0, lambda t: gamma_curve(A1, A2, A3, t), quad, vectorized=True).value)


def counterexample_report(which: int, t_grid) -> list[tuple[float, float, float]]:
    """Rows ``(t, gamma(t), kappa)`` for counterexample set 1 or 2."""
    if which not in COUNTEREXAMPLES:
        raise ValueError("counterexample set must be 1 or 2")
    A1, A2, A3 = COUNTEREXAMPLES[which]
    t_grid = np.asarray(t_grid, dtype=float)
    g = gamma_curve(A1, A2, A3, t_grid)
    k = kappa(A1, A2, A3)
    return [(float(t), float(v), k) for t, v in zip(t_grid, g)]
