"""Minimization of the weighted quotient on the spherical cross-section.

For an axisymmetric cone the sharp constant equals the minimum over angular
profiles phi(theta) of

    Q(phi) = int w ((phi')^2 + H^2 phi^2)^(p/2) dtheta / int w |phi|^p dtheta,

w(theta) = cos^(k+a-1) sin^(d-k-1).  For p = 2 this is the eigenvalue problem

    -(w phi')' = lambda w phi,      M = lambda_1 + H^2,

discretized with piecewise-linear finite elements on a mesh graded toward the
singular end theta = pi/2; for general p the discrete quotient is minimized
directly by projected gradient descent in the weighted-H1 metric.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .params import (
    ConeKind,
    ConeSpec,
    HardyParams,
    hardy_exponent,
    require_admissible,
)
from .quadrature import DEFAULT_PANEL_ORDER, AngularWeight, _panel

HALF_PI = math.pi / 2


class ConvergenceError(RuntimeError):
    """An iterative solver ran out of iterations; carries the last residual."""

    def __init__(self, message: str, residual: float, trace: list[float] | None = None):
        super().__init__(message)
        self.residual = residual
        self.trace = trace or []


class BoundaryCondition(str, Enum):
    DIRICHLET = "dirichlet"
    NATURAL = "natural"


DIRICHLET = BoundaryCondition.DIRICHLET
NATURAL = BoundaryCondition.NATURAL


@dataclass(frozen=True)
class AngularDomain:
    """A polar-angle interval with an endpoint condition at each end.

    Natural (no-flux) conditions are imposed weakly and mark coordinate poles
    interior to the cone; Dirichlet marks genuine cross-section boundary.
    """

    theta1: float
    theta2: float
    bc1: BoundaryCondition
    bc2: BoundaryCondition

    def __post_init__(self) -> None:
        if not (0.0 <= self.theta1 < self.theta2 <= HALF_PI):
            raise ValueError(f"need 0 <= theta1 < theta2 <= pi/2, got ({self.theta1}, {self.theta2})")


@dataclass(frozen=True, eq=False)
class DiscretizedFunction:
    """Piecewise-linear function given by nodal values on an increasing mesh."""

    mesh: np.ndarray
    values: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "mesh", np.asarray(self.mesh, dtype=float))
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))
        if self.mesh.ndim != 1 or self.mesh.shape != self.values.shape:
            raise ValueError("mesh and values must be matching 1-D arrays")
        if np.any(np.diff(self.mesh) <= 0):
            raise ValueError("mesh must be strictly increasing")

    def __call__(self, theta: np.ndarray) -> np.ndarray:
        return np.interp(theta, self.mesh, self.values)

    def slope(self, theta: np.ndarray) -> np.ndarray:
        """Piecewise-constant derivative, evaluated elementwise."""
        slopes = np.diff(self.values) / np.diff(self.mesh)
        idx = np.clip(np.searchsorted(self.mesh, theta, side="right") - 1, 0, slopes.size - 1)
        return slopes[idx]


@dataclass(frozen=True, eq=False)
class SpectralResult:
    """Computed spherical minimum M, eigenvalue (p = 2), and minimizer."""

    M: float
    lam: float | None
    minimizer: DiscretizedFunction
    iterations: int
    residual: float


def bc_for_cone(params: HardyParams, cone: ConeSpec) -> AngularDomain:
    """Endpoint conditions of the cross-section of an admissible cone.

    theta = pi/2 is Dirichlet where {y = 0} was removed, except in the
    superdegenerate regime k+a >= p where the removed set has zero weighted
    p-capacity and the natural condition takes over.
    """
    require_admissible(params, cone)
    superdeg = params.k + params.a >= params.p
    kind = cone.kind
    if kind in (ConeKind.FULL_SPACE, ConeKind.PUNCTURED_SPACE):
        return AngularDomain(0.0, HALF_PI, NATURAL, NATURAL)
    if kind in (ConeKind.COMPLEMENT_SIGMA0, ConeKind.HALF_SPACE):
        bc2 = NATURAL if superdeg else DIRICHLET
        return AngularDomain(0.0, HALF_PI, NATURAL, bc2)
    bc1 = NATURAL if cone.theta1 == 0.0 else DIRICHLET
    if cone.theta2 == HALF_PI:
        bc2 = NATURAL if superdeg else DIRICHLET
    else:
        bc2 = DIRICHLET
    return AngularDomain(cone.theta1, cone.theta2, bc1, bc2)


def grading_cap(n: int) -> float:
    """Largest usable grading exponent: keeps the last element above ~64 ulp of pi/2."""
    return 32.2 / math.log(n)


def graded_mesh(theta1: float, theta2: float, n: int, gamma: float = 2.0) -> np.ndarray:
    """Mesh of n elements, clustered toward theta2 = pi/2 as (1 - j/n)^gamma.

    Away from the singular end (theta2 < pi/2) the mesh is uniform.
    """
    if n < 2:
        raise ValueError("need at least 2 elements")
    j = np.arange(n + 1) / n
    if theta2 == HALF_PI:
        gamma = min(gamma, grading_cap(n))
        mesh = HALF_PI - (HALF_PI - theta1) * (1.0 - j) ** gamma
        mesh[0] = theta1
        mesh[-1] = HALF_PI
        return mesh
    return theta1 + (theta2 - theta1) * j


def _auto_gamma(params: HardyParams, domain: AngularDomain, n: int) -> float:
    """Grading matched to the boundary-layer exponent at pi/2.

    With a Dirichlet condition at the singular end the minimizer behaves like
    u^s, s = (p - (k+a)) / (p-1) (the homogeneous solution of the weighted
    one-dimensional p-Laplacian; s = 2-(k+a) at p = 2), so the mesh exponent
    scales like 1/s for s < 1.
    """
    if domain.theta2 != HALF_PI or domain.bc2 is not DIRICHLET:
        return 2.0
    s = (params.p - (params.k + params.a)) / (params.p - 1.0)
    if s >= 1.2:
        return 2.0
    return min(max(2.0, 2.4 / max(s, 0.05)), grading_cap(n))


def _element_rules(
    weight: AngularWeight, mesh: np.ndarray, nq: int
) -> tuple[np.ndarray, np.ndarray]:
    """Per-element quadrature nodes and weights, shape (n_elements, nq)."""
    n = mesh.size - 1
    theta = np.empty((n, nq))
    w = np.empty((n, nq))
    for e in range(n):
        theta[e], w[e] = _panel(weight, mesh[e], mesh[e + 1], nq)
    return theta, w


def _free_slice(domain: AngularDomain, n_nodes: int) -> slice:
    lo = 1 if domain.bc1 is DIRICHLET else 0
    hi = n_nodes - 1 if domain.bc2 is DIRICHLET else n_nodes
    return slice(lo, hi)


def assemble_p2(
    params: HardyParams,
    domain: AngularDomain,
    mesh_size: int,
    grading: float | None = None,
    quad_order: int = DEFAULT_PANEL_ORDER,
) -> tuple[sp.csc_matrix, sp.csc_matrix, np.ndarray]:
    """P1 finite-element matrices of the weighted eigenproblem.

    Returns (stiffness, mass, mesh) with stiffness[i,j] = int w phi_i' phi_j',
    mass[i,j] = int w phi_i phi_j; Dirichlet endpoint rows/columns are
    eliminated, so the matrices act on the free nodes of the returned mesh.
    """
    if mesh_size < 16:
        raise ValueError("mesh_size must be at least 16")
    if domain.theta2 == HALF_PI and params.k + params.a <= 0:
        raise ValueError("weight not integrable up to pi/2 (needs k+a > 0)")
    gamma = _auto_gamma(params, domain, mesh_size) if grading is None else grading
    mesh = graded_mesh(domain.theta1, domain.theta2, mesh_size, gamma)
    weight = AngularWeight.for_params(params)
    theta_q, w_q = _element_rules(weight, mesh, quad_order)
    h = np.diff(mesh)
    n1 = (mesh[1:, None] - theta_q) / h[:, None]
    n2 = (theta_q - mesh[:-1, None]) / h[:, None]
    w0 = w_q.sum(axis=1)

    n_nodes = mesh.size
    stiff_diag = np.zeros(n_nodes)
    stiff_off = -w0 / h**2
    stiff_diag[:-1] += w0 / h**2
    stiff_diag[1:] += w0 / h**2
    mass_diag = np.zeros(n_nodes)
    mass_diag[:-1] += (w_q * n1 * n1).sum(axis=1)
    mass_diag[1:] += (w_q * n2 * n2).sum(axis=1)
    mass_off = (w_q * n1 * n2).sum(axis=1)

    free = _free_slice(domain, n_nodes)
    lo, hi = free.start, free.stop
    stiffness = sp.diags(
        [stiff_off[lo : hi - 1], stiff_diag[lo:hi], stiff_off[lo : hi - 1]], [-1, 0, 1], format="csc"
    )
    mass = sp.diags(
        [mass_off[lo : hi - 1], mass_diag[lo:hi], mass_off[lo : hi - 1]], [-1, 0, 1], format="csc"
    )
    return stiffness, mass, mesh


def smallest_eigenpair(
    stiffness, mass, tol: float = 1e-10, max_iter: int = 2000
) -> tuple[float, np.ndarray]:
    """Smallest generalized eigenvalue of (stiffness, mass) and its eigenvector.

    Shifted inverse power iteration: iterate v <- (S - mu M)^-1 M v starting
    below the spectrum at mu = -1.  Once the residual is small against the
    gap estimated from the observed contraction ratio, the shift is
    re-anchored just below the Rayleigh value (provably still below
    lambda_1), which collapses the convergence factor.  The residual
    ||S v - lambda M v||_2 is taken relative to ||v||_M = 1, with a floor at
    the rounding level of the matrix-vector products; v comes back
    M-normalized with nonnegative weighted mean.
    """
    S = sp.csc_matrix(stiffness)
    M = sp.csc_matrix(mass)
    if S.shape != M.shape or S.shape[0] != S.shape[1]:
        raise ValueError("stiffness and mass must be square matrices of equal size")
    mu = -1.0
    solve_shifted = spla.splu((S - mu * M).tocsc()).solve
    abs_S = abs(S)
    abs_M = abs(M)

    v = np.ones(S.shape[0])
    v /= math.sqrt(v @ (M @ v))
    lam = float(v @ (S @ v))
    residual = math.inf
    history: list[float] = []
    reshifts = 0
    for _ in range(max_iter):
        v = solve_shifted(M @ v)
        v /= math.sqrt(v @ (M @ v))
        lam = float(v @ (S @ v))
        sv = S @ v
        mv = M @ v
        r = sv - lam * mv
        residual = float(np.linalg.norm(r))
        # rounding floor of the matvecs: |S||v| does not cancel, S v may
        av = np.abs(v)
        floor = 1e-14 * float(np.linalg.norm(abs_S @ av) + abs(lam) * np.linalg.norm(abs_M @ av))
        if residual <= max(tol, floor):
            break
        history.append(residual)
        if len(history) >= 4 and reshifts < 4:
            rho = (history[-1] / history[-3]) ** 0.5
            if 0 < rho < 1:
                gap_est = (lam - mu) * (1.0 / rho - 1.0)
                # Ritz value is within `residual` of the spectrum; once the
                # residual is well inside the gap the nearest eigenvalue is
                # lambda_1, so this shift stays strictly below it.
                if math.isfinite(gap_est) and residual < 0.05 * gap_est:
                    mu_new = lam - max(8.0 * residual, 1e-2 * gap_est)
                    if mu_new > mu:
                        mu = mu_new
                        solve_shifted = spla.splu((S - mu * M).tocsc()).solve
                        reshifts += 1
                        history.clear()
    else:
        raise ConvergenceError(
            f"inverse power iteration did not reach tol={tol:g} in {max_iter} iterations",
            residual=residual,
        )
    if float((M @ v).sum()) < 0:
        v = -v
    return lam, v


def _expand_free(domain: AngularDomain, mesh: np.ndarray, v: np.ndarray) -> np.ndarray:
    full = np.zeros(mesh.size)
    full[_free_slice(domain, mesh.size)] = v
    return full


class _PQuotient:
    """Discrete quotient Q(phi) with analytic nodal gradient."""

    def __init__(
        self,
        params: HardyParams,
        domain: AngularDomain,
        mesh: np.ndarray,
        quad_order: int = DEFAULT_PANEL_ORDER,
    ):
        weight = AngularWeight.for_params(params)
        theta_q, w_q = _element_rules(weight, mesh, quad_order)
        h = np.diff(mesh)
        self.mesh = mesh
        self.h = h
        self.n1 = (mesh[1:, None] - theta_q) / h[:, None]
        self.n2 = (theta_q - mesh[:-1, None]) / h[:, None]
        self.w = w_q
        self.p = params.p
        self.H2 = hardy_exponent(params).H ** 2
        self.mask = np.ones(mesh.size)
        if domain.bc1 is DIRICHLET:
            self.mask[0] = 0.0
        if domain.bc2 is DIRICHLET:
            self.mask[-1] = 0.0

    def _fields(self, v: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        phi = v[:-1, None] * self.n1 + v[1:, None] * self.n2
        dphi = np.broadcast_to(((v[1:] - v[:-1]) / self.h)[:, None], phi.shape)
        return phi, dphi

    def value(self, v: np.ndarray) -> float:
        phi, dphi = self._fields(v)
        num = (self.w * (dphi**2 + self.H2 * phi**2) ** (self.p / 2)).sum()
        den = (self.w * np.abs(phi) ** self.p).sum()
        return num / den

    def value_grad(self, v: np.ndarray) -> tuple[float, np.ndarray]:
        p = self.p
        phi, dphi = self._fields(v)
        e2 = dphi**2 + self.H2 * phi**2
        num = (self.w * e2 ** (p / 2)).sum()
        den = (self.w * np.abs(phi) ** p).sum()
        q = num / den
        with np.errstate(divide="ignore", invalid="ignore"):
            e_pow = np.where(e2 > 0.0, e2 ** (p / 2 - 1.0), 0.0)
            phi_pow = np.where(phi != 0.0, np.abs(phi) ** (p - 1.0) * np.sign(phi), 0.0)
        c_phi = self.w * p * e_pow * self.H2 * phi
        c_dphi = (self.w * p * e_pow * dphi).sum(axis=1) / self.h
        dnum = np.zeros_like(v)
        dnum[:-1] += (c_phi * self.n1).sum(axis=1) - c_dphi
        dnum[1:] += (c_phi * self.n2).sum(axis=1) + c_dphi
        c_den = self.w * p * phi_pow
        dden = np.zeros_like(v)
        dden[:-1] += (c_den * self.n1).sum(axis=1)
        dden[1:] += (c_den * self.n2).sum(axis=1)
        return q, (dnum - q * dden) / den * self.mask

    def normalize(self, v: np.ndarray) -> np.ndarray:
        """Project to the nonnegative cone, apply Dirichlet data, unit p-norm."""
        v = np.abs(v) * self.mask
        phi, _ = self._fields(v)
        den = (self.w * phi**self.p).sum()
        if den <= 0.0 or not np.isfinite(den):
            raise ValueError("degenerate profile: zero after Dirichlet projection")
        return v / den ** (1.0 / self.p)


def default_init(params: HardyParams, domain: AngularDomain, mesh: np.ndarray) -> np.ndarray:
    """Profile cos^max(0, 2-(k+a)) adjusted to the Dirichlet data."""
    s = max(0.0, 2.0 - (params.k + params.a))
    v = np.cos(mesh) ** s
    if domain.bc1 is DIRICHLET:
        v = v * np.sin(mesh - domain.theta1)
    if domain.bc2 is DIRICHLET and (s == 0.0 or domain.theta2 != HALF_PI):
        v = v * np.sin(domain.theta2 - mesh)
    return v


def minimize_rayleigh_p(
    params: HardyParams,
    domain: AngularDomain,
    mesh_size: int,
    init: DiscretizedFunction | None = None,
    tol: float = 1e-9,
    grad_tol: float = 1e-6,
    max_iter: int = 100_000,
    grading: float | None = None,
    quad_order: int = DEFAULT_PANEL_ORDER,
) -> SpectralResult:
    """Minimize the discrete quotient by projected gradient descent.

    The descent direction is the gradient in the weighted-H1 metric (solving
    (S + (1+H^2) M) d = grad Q with the p=2 matrices), with backtracking line
    search; iterates are clamped to the nonnegative cone and renormalized to
    unit weighted p-norm.  Stops when the relative decrease of Q over an
    iteration drops below tol and the metric gradient norm below grad_tol.
    """
    stiffness, mass, mesh = assemble_p2(params, domain, mesh_size, grading, quad_order)
    pq = _PQuotient(params, domain, mesh, quad_order)
    precond = spla.splu((stiffness + (1.0 + pq.H2) * mass).tocsc()).solve
    free = _free_slice(domain, mesh.size)

    if init is None:
        v = _default_start(params, domain, mesh, stiffness, mass)
    else:
        v = init(mesh)
    v = pq.normalize(v.astype(float))

    q, g = pq.value_grad(v)
    eta = 1.0
    iterations = 0
    grad_norm = math.inf
    trace = [q]
    while iterations < max_iter:
        iterations += 1
        direction = np.zeros_like(v)
        direction[free] = precond(g[free])
        slope = float(g @ direction)
        if slope <= 0.0:
            grad_norm = 0.0
            break
        grad_norm = math.sqrt(slope) / max(abs(q), 1e-300)
        accepted = False
        for _ in range(60):
            trial = pq.normalize(v - eta * direction)
            q_trial = pq.value(trial)
            if q_trial < q - 1e-4 * eta * slope:
                accepted = True
                break
            eta *= 0.5
        if not accepted:
            break  # stagnation at the line-search floor: descent exhausted
        rel_dec = (q - q_trial) / max(abs(q), 1e-300)
        v = trial
        q, g = pq.value_grad(v)
        trace.append(q)
        eta = min(eta * 1.5, 4.0)
        if rel_dec < tol and grad_norm < grad_tol:
            break
    else:
        raise ConvergenceError(
            f"quotient descent did not converge in {max_iter} iterations "
            f"(last relative gradient {grad_norm:.3e})",
            residual=grad_norm,
            trace=trace[-20:],
        )

    exponent = hardy_exponent(params)
    lam = q - exponent.H**2 if params.p == 2 else None
    return SpectralResult(
        M=q,
        lam=lam,
        minimizer=DiscretizedFunction(mesh, v),
        iterations=iterations,
        residual=grad_norm,
    )


def _default_start(
    params: HardyParams,
    domain: AngularDomain,
    mesh: np.ndarray,
    stiffness: sp.csc_matrix,
    mass: sp.csc_matrix,
) -> np.ndarray:
    """p=2 eigenfunction when the eigensolve succeeds, else the cosine profile."""
    try:
        _, vec = smallest_eigenpair(stiffness, mass)
        return _expand_free(domain, mesh, vec)
    except (ConvergenceError, RuntimeError):
        return default_init(params, domain, mesh)


def solve_M(
    params: HardyParams,
    cone: ConeSpec,
    mesh_size: int = 512,
    grading: float | None = None,
    quad_order: int = DEFAULT_PANEL_ORDER,
    eigen_tol: float = 1e-10,
    init: DiscretizedFunction | None = None,
) -> SpectralResult:
    """Spherical minimum M of the cone: eigensolve for p = 2, descent otherwise."""
    domain = bc_for_cone(params, cone)
    exponent = hardy_exponent(params)
    if params.p != 2:
        return minimize_rayleigh_p(
            params, domain, mesh_size, init=init, grading=grading, quad_order=quad_order
        )
    stiffness, mass, mesh = assemble_p2(params, domain, mesh_size, grading, quad_order)
    lam, vec = smallest_eigenpair(stiffness, mass, tol=eigen_tol)
    pq = _PQuotient(params, domain, mesh, quad_order)
    values = pq.normalize(_expand_free(domain, mesh, vec))
    residual = float(np.linalg.norm(stiffness @ vec - lam * (mass @ vec)))
    return SpectralResult(
        M=lam + exponent.H**2,
        lam=lam,
        minimizer=DiscretizedFunction(mesh, values),
        iterations=0,
        residual=residual,
    )


def closed_eigen_sigma0(params: HardyParams) -> tuple[float, Callable[[np.ndarray], np.ndarray]]:
    """Exact first eigenpair on the complement of {y=0} for p = 2, k+a < 2.

    lambda_1 = (d-k)(2-(k+a)) with eigenfunction cos^(2-(k+a))(theta); the
    profile vanishes at theta = pi/2 exactly when k+a < 2.
    """
    if params.p != 2:
        raise ValueError(f"closed eigenpair requires p = 2, got p={params.p}")
    s = 2.0 - (params.k + params.a)
    if s <= 0:
        raise ValueError(f"closed eigenpair requires k+a < 2, got k+a={params.k + params.a}")
    lam1 = (params.d - params.k) * s

    def sampler(theta: np.ndarray) -> np.ndarray:
        return np.sin(HALF_PI - np.asarray(theta, dtype=float)) ** s

    return lam1, sampler
