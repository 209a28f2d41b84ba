"""Quadrature against the angular weight w(theta) = cos^(k+a-1) sin^(d-k-1).

Integrals over the sphere of axisymmetric functions f(theta) against
|Pi sigma|^a reduce to prefactor * int f w dtheta on (0, pi/2), so all
Rayleigh quotients run through the rules built here.  The weight is singular
(or degenerate) at both ends; rules absorb the endpoint powers exactly:

* a panel covering both ends maps t = cos(2 theta) and uses Gauss-Jacobi with
  exponents ((d-k)/2 - 1, (k+a)/2 - 1),
* a panel touching pi/2 works in u = pi/2 - theta and absorbs u^(k+a-1)
  (cancellation-free even for end elements ~1e-12 wide),
* a panel touching 0 absorbs theta^(d-k-1) the same way,
* interior panels use Gauss-Legendre with the smooth weight in the integrand.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
from scipy.special import roots_jacobi, roots_legendre

from .params import ConeKind, ConeSpec, HardyParams

HALF_PI = math.pi / 2

DEFAULT_RULE_ORDER = 256
DEFAULT_PANEL_ORDER = 8


def sphere_surface_area(n: int) -> float:
    """Surface measure of the unit n-sphere, |S^n| = 2 pi^((n+1)/2) / Gamma((n+1)/2)."""
    if n < 0:
        raise ValueError(f"need n >= 0, got {n}")
    return 2.0 * math.pi ** ((n + 1) / 2) / math.gamma((n + 1) / 2)


@dataclass(frozen=True)
class AngularWeight:
    """Weight cos^cos_exponent * sin^sin_exponent with its sphere prefactor.

    prefactor = |S^(k-1)| * |S^(d-k-1)| turns the 1-D integral into the full
    sphere integral of an axisymmetric function; it is halved for the half
    space, whose cross-section is a single hemisphere of the y-axis.
    """

    cos_exponent: float
    sin_exponent: float
    prefactor: float

    @classmethod
    def for_params(cls, params: HardyParams, cone: ConeSpec | None = None) -> "AngularWeight":
        pref = sphere_surface_area(params.k - 1) * sphere_surface_area(params.d - params.k - 1)
        if cone is not None and cone.kind is ConeKind.HALF_SPACE:
            pref *= 0.5
        return cls(
            cos_exponent=params.k + params.a - 1.0,
            sin_exponent=params.d - params.k - 1.0,
            prefactor=pref,
        )

    def __call__(self, theta: np.ndarray) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        # cos(theta) evaluated as sin(pi/2 - theta) keeps relative accuracy near pi/2
        return np.sin(HALF_PI - theta) ** self.cos_exponent * np.sin(theta) ** self.sin_exponent


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    """Nodes/weights with the angular weight folded into the weights."""

    nodes: np.ndarray
    weights: np.ndarray
    theta1: float
    theta2: float
    order: int

    def __post_init__(self) -> None:
        if self.nodes.ndim != 1 or self.nodes.shape != self.weights.shape:
            raise ValueError("nodes and weights must be matching 1-D arrays")
        if np.any(np.diff(self.nodes) <= 0):
            raise ValueError("nodes must be strictly increasing")
        if self.nodes[0] <= self.theta1 or self.nodes[-1] >= self.theta2:
            raise ValueError("nodes must be interior to the interval")


@lru_cache(maxsize=512)
def _gauss_jacobi(n: int, alpha: float, beta: float) -> tuple[np.ndarray, np.ndarray]:
    if alpha == 0.0 and beta == 0.0:
        x, w = roots_legendre(n)
    else:
        x, w = roots_jacobi(n, alpha, beta)
    x.flags.writeable = False
    w.flags.writeable = False
    return x, w


def _panel(weight: AngularWeight, th1: float, th2: float, n: int) -> tuple[np.ndarray, np.ndarray]:
    alpha = weight.cos_exponent
    beta = weight.sin_exponent
    at0 = th1 == 0.0
    at90 = th2 == HALF_PI
    if at0 and at90:
        # Gauss-Jacobi in t = cos(2 theta); both endpoint powers live in the
        # Jacobi weight (1-t)^A (1+t)^B, A = (beta-1)/2, B = (alpha-1)/2.
        A = (beta - 1.0) / 2.0
        B = (alpha - 1.0) / 2.0
        x, wx = _gauss_jacobi(n, A, B)
        theta = 0.5 * np.arccos(x)
        w = wx * 2.0 ** (-(A + B + 2.0))
    elif at90:
        L = HALF_PI - th1
        x, wx = _gauss_jacobi(n, 0.0, alpha)
        u = 0.5 * L * (1.0 + x)
        w = wx * (0.5 * L) ** (alpha + 1.0) * np.sinc(u / math.pi) ** alpha * np.cos(u) ** beta
        theta = HALF_PI - u
    elif at0:
        L = th2
        x, wx = _gauss_jacobi(n, 0.0, beta)
        theta = 0.5 * L * (1.0 + x)
        w = wx * (0.5 * L) ** (beta + 1.0) * np.sinc(theta / math.pi) ** beta * np.cos(theta) ** alpha
    else:
        x, wx = _gauss_jacobi(n, 0.0, 0.0)
        theta = th1 + 0.5 * (th2 - th1) * (1.0 + x)
        w = wx * 0.5 * (th2 - th1) * np.sin(HALF_PI - theta) ** alpha * np.sin(theta) ** beta
    idx = np.argsort(theta)
    return theta[idx], w[idx]


def _check_integrable(weight: AngularWeight, th2: float) -> None:
    if th2 == HALF_PI and weight.cos_exponent <= -1.0:
        raise ValueError(
            f"weight cos^{weight.cos_exponent:g} is not integrable up to theta = pi/2 (needs k+a > 0)"
        )


def build_rule(
    weight: AngularWeight, interval: tuple[float, float], n: int = DEFAULT_RULE_ORDER
) -> QuadratureRule:
    """Gauss-type rule for int f(theta) w(theta) dtheta over the interval."""
    th1, th2 = float(interval[0]), float(interval[1])
    if not (0.0 <= th1 < th2 <= HALF_PI):
        raise ValueError(f"interval must satisfy 0 <= theta1 < theta2 <= pi/2, got {interval}")
    if n < 1:
        raise ValueError("need at least one node")
    _check_integrable(weight, th2)
    theta, w = _panel(weight, th1, th2, n)
    return QuadratureRule(nodes=theta, weights=w, theta1=th1, theta2=th2, order=n)


def composite_rule(
    weight: AngularWeight, mesh: Sequence[float] | np.ndarray, n_per_panel: int = DEFAULT_PANEL_ORDER
) -> QuadratureRule:
    """Panel-by-panel rule over a mesh; exact for piecewise-linear functions."""
    mesh = np.asarray(mesh, dtype=float)
    if mesh.ndim != 1 or mesh.size < 2 or np.any(np.diff(mesh) <= 0):
        raise ValueError("mesh must be a strictly increasing 1-D array")
    _check_integrable(weight, float(mesh[-1]))
    nodes = np.empty((mesh.size - 1, n_per_panel))
    weights = np.empty_like(nodes)
    for e in range(mesh.size - 1):
        nodes[e], weights[e] = _panel(weight, mesh[e], mesh[e + 1], n_per_panel)
    return QuadratureRule(
        nodes=nodes.ravel(),
        weights=weights.ravel(),
        theta1=float(mesh[0]),
        theta2=float(mesh[-1]),
        order=n_per_panel * (mesh.size - 1),
    )


def integrate(rule: QuadratureRule, f: Callable[[np.ndarray], np.ndarray]) -> float:
    """Apply the rule: sum of weights * f(nodes)."""
    vals = np.asarray(f(rule.nodes), dtype=float)
    if vals.shape != rule.nodes.shape:
        vals = np.broadcast_to(vals, rule.nodes.shape)
    if not np.all(np.isfinite(vals)):
        raise ValueError("integrand returned non-finite values at quadrature nodes")
    return float(rule.weights @ vals)


def angular_weight_mass(weight: AngularWeight, interval: tuple[float, float] | None = None) -> float:
    """int w dtheta over the interval (default: the whole quarter-arc)."""
    rule = build_rule(weight, interval or (0.0, HALF_PI))
    return float(rule.weights.sum())


def sphere_weight_mass(params: HardyParams) -> float:
    """Total mass int_{S^(d-1)} |Pi sigma|^a dsigma = prefactor * B((k+a)/2, (d-k)/2) / 2."""
    if params.k + params.a <= 0:
        raise ValueError(f"sphere weight integrable only for k+a > 0, got {params.k + params.a}")
    weight = AngularWeight.for_params(params)
    return weight.prefactor * angular_weight_mass(weight)
