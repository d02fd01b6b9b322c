"""
The interpolation weights beta_theta and integration against them.

For 0 < theta < 1::

    beta_theta(t) = sin(pi theta) / (2 theta (cosh(pi t) + cos(pi theta)))

``beta_0(t) = pi / (2 (cosh(pi t) + 1))`` is the theta -> 0 limit and
``beta_1`` is the unit point mass at ``t = 0``. Each is a probability
density on the real line with exponential tails, so integrals are computed
with composite Gauss-Legendre panels on a truncated interval whose tail
mass is bounded in closed form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

NODES_PER_PANEL = 16
PANEL_WIDTH = 0.5
MAX_PANELS = 20000


class QuadratureError(RuntimeError):
    """A quadrature rule could not reach or certify the requested tolerance."""


def _check_theta(theta: float) -> float:
    theta = float(theta)
    if not 0.0 <= theta <= 1.0:
        raise ValueError(f"theta must lie in [0, 1], got {theta}")
    return theta


def beta(theta: float, t):
    """Evaluate beta_theta at ``t`` (scalar or array), for theta in [0, 1)."""
    theta = _check_theta(theta)
    if theta == 1.0:
        raise ValueError("beta_1 is a point mass; integrate with make_quadrature(1, ...)")
    t = np.abs(np.asarray(t, dtype=float))
    # Written in terms of exp(-pi |t|) so that large |t| does not overflow.
    e = np.exp(-np.pi * t)
    if theta == 0.0:
        out = np.pi * e / (1.0 + e) ** 2
    else:
        c = math.cos(math.pi * theta)
        out = (math.sin(math.pi * theta) / theta) * e / (1.0 + 2.0 * c * e + e * e)
    return out if out.ndim else float(out)


def beta_cdf_tail(theta: float, T: float) -> float:
    """Exact mass of beta_theta outside [-T, T]."""
    theta = _check_theta(theta)
    if theta == 1.0:
        return 0.0
    x = math.pi * T / 2.0
    one_minus_tanh = 2.0 / (math.exp(2.0 * x) + 1.0)
    if theta == 0.0:
        return one_minus_tanh
    a = math.tan(math.pi * theta / 2.0)
    tanh = 1.0 - one_minus_tanh
    return (2.0 / (math.pi * theta)) * math.atan(a * one_minus_tanh / (1.0 + a * a * tanh))


def tail_constant(theta: float) -> tuple[float, float]:
    """Return ``(c, t0)`` with tail mass beyond ``T >= t0`` at most ``c exp(-pi T)``.

    Uses ``cosh(pi t) >= exp(pi |t|) / 2``; when ``cos(pi theta) < 0`` the
    denominator is only bounded by ``exp(pi |t|) / 4``, valid once
    ``exp(pi |t|) >= 4``.
    """
    theta = _check_theta(theta)
    s = math.pi if theta == 0.0 else math.sin(math.pi * theta) / theta
    if theta == 0.0 or math.cos(math.pi * theta) >= 0.0:
        return 2.0 * s / math.pi, 0.0
    return 4.0 * s / math.pi, math.log(4.0) / math.pi


@dataclass(frozen=True)
class QuadratureRule:
    """Gauss-Legendre rule for integrals against beta_theta.

    ``weights`` are the plain Gauss-Legendre weights on ``[-T, T]``;
    ``density_weights`` already include the density and are what integrals
    use. For theta = 1 the rule is the single node ``t = 0`` with weight 1.
    """

    theta: float
    truncation: float
    panels: int
    nodes: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)
    tail_bound: float
    tol: float

    @property
    def density_weights(self) -> np.ndarray:
        if self.theta == 1.0:
            return self.weights
        return self.weights * beta(self.theta, self.nodes)

    def normalization(self) -> float:
        return float(self.density_weights.sum()) + self.tail_bound

    def validate(self) -> None:
        if abs(self.normalization() - 1.0) > max(self.tol, 1e-14):
            raise QuadratureError(
                f"rule for theta={self.theta} misses normalization: {self.normalization() - 1.0:.3e}"
            )


def _panel_width(theta: float) -> float:
    # beta_theta has poles at t = +-i(1 - theta); keep panels comparable to
    # that distance so each panel stays spectrally accurate.
    return min(PANEL_WIDTH, 2.0 * (1.0 - theta))


def make_quadrature(theta: float, tol: float = 1e-10, nodes_per_panel: int = NODES_PER_PANEL,
                    max_panels: int = MAX_PANELS) -> QuadratureRule:
    """Build a rule whose certified tail mass is below ``tol / 2``."""
    theta = _check_theta(theta)
    if not 1e-14 < tol < 1e-2:
        raise ValueError(f"tol must lie in (1e-14, 1e-2), got {tol}")
    if theta == 1.0:
        return QuadratureRule(1.0, 0.0, 0, np.zeros(1), np.ones(1), 0.0, tol)
    c, t0 = tail_constant(theta)
    T = max(t0, math.log(2.0 * c / tol) / math.pi, 1.0)
    h = _panel_width(theta)
    half = math.ceil(T / h)
    T = half * h
    panels = 2 * half
    if panels > max_panels:
        raise QuadratureError(f"theta={theta}, tol={tol} needs {panels} panels (max {max_panels})")
    x, w = np.polynomial.legendre.leggauss(nodes_per_panel)
    left = -T + h * np.arange(panels)
    nodes = (left[:, None] + 0.5 * h * (x[None, :] + 1.0)).ravel()
    weights = np.tile(0.5 * h * w, panels)
    tail = c * math.exp(-math.pi * T)
    rule = QuadratureRule(theta, T, panels, nodes, weights, tail, tol)
    rule.validate()
    return rule


@dataclass(frozen=True)
class Integral:
    value: object
    error: float


def integrate_beta(theta: float, g: Callable, quad: QuadratureRule | None = None,
                   vectorized: bool = False) -> Integral:
    """Integrate ``g(t)`` against beta_theta.

    ``g`` may return scalars or matrices. With ``vectorized=True`` it is
    called once on the whole node array and must return values stacked
    along the first axis. The reported ``error`` is the tail mass times the
    largest magnitude seen at the nodes; it does not bound the (spectrally
    small) interior quadrature error.
    """
    theta = _check_theta(theta)
    if quad is None:
        quad = make_quadrature(theta)
    elif quad.theta != theta:
        raise ValueError(f"rule was built for theta={quad.theta}, not {theta}")
    if vectorized:
        vals = np.asarray(g(quad.nodes))
    else:
        vals = np.asarray([g(t) for t in quad.nodes])
    if not np.all(np.isfinite(vals)):
        raise QuadratureError("integrand is not finite at some node")
    dw = quad.density_weights
    value = np.tensordot(dw, vals, axes=(0, 0))
    sup = float(np.abs(vals).reshape(len(dw), -1).max()) if vals.size else 0.0
    if np.ndim(value) == 0:
        value = value.item()
    return Integral(value, quad.tail_bound * sup)


def beta_table(theta: float, tmin: float, tmax: float, step: float):
    """Rows ``(t, beta_theta(t))`` on an inclusive grid."""
    n = int(round((tmax - tmin) / step))
    ts = tmin + step * np.arange(n + 1)
    return [(float(t), beta(theta, t)) for t in ts]
