"""Problem parameters, admissibility predicates, and closed-form sharp constants.

Everything here concerns the best constant m in

    m * int_C |y|^a |z|^(-b-p) |u|^p dz  <=  int_C |y|^a |z|^(-b) |grad u|^p dz

for u compactly supported in a cone C of R^d = R^(d-k) x R^k, z = (x, y).
The sign-carrying exponent

    H = (d + a - p - b) / p

governs the radial profile r^(-H) of the extremal family, and |H|^p is the
baseline value of m on the largest cones.  The dispatch below returns the
sharp constant whenever it is known in closed form; every value depends on b
only through |H|.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

HALF_PI = math.pi / 2


class AdmissibilityError(ValueError):
    """A (parameters, cone) pair fails the weight-integrability requirements."""


@dataclass(frozen=True)
class HardyParams:
    """Dimensions (d, k), integrability exponent p, and weight exponents (a, b).

    The cylindrical weight |y|^a acts on the k trailing coordinates; a = 0 is
    accepted as the unweighted cross-validation channel.
    """

    d: int
    k: int
    p: float
    a: float
    b: float

    def __post_init__(self) -> None:
        if not (isinstance(self.d, int) and isinstance(self.k, int)):
            raise ValueError("d and k must be integers")
        if self.d < 2:
            raise ValueError(f"need d >= 2, got d={self.d}")
        if not 1 <= self.k < self.d:
            raise ValueError(f"need 1 <= k < d, got k={self.k}, d={self.d}")
        if not (math.isfinite(self.p) and self.p > 1):
            raise ValueError(f"need p > 1, got p={self.p}")
        if not (math.isfinite(self.a) and math.isfinite(self.b)):
            raise ValueError("a and b must be finite")


@dataclass(frozen=True)
class HardyExponent:
    """The signed exponent H = (d+a-p-b)/p and its p-th power |H|^p."""

    H: float
    H_abs_p: float


def hardy_exponent(params: HardyParams) -> HardyExponent:
    """Exponent of the extremal radial profile, H = (d+a)/p - (p+b)/p."""
    H = (params.d + params.a - params.p - params.b) / params.p
    return HardyExponent(H=H, H_abs_p=abs(H) ** params.p)


class ConeKind(str, Enum):
    FULL_SPACE = "full"
    PUNCTURED_SPACE = "punctured"
    COMPLEMENT_SIGMA0 = "complement-sigma0"
    HALF_SPACE = "half-space"
    BAND = "band"


@dataclass(frozen=True)
class ConeSpec:
    """An axisymmetric cone, described by its polar-angle cross-section.

    The polar angle theta satisfies |y| = r cos(theta), |x| = r sin(theta),
    so theta = pi/2 is the singular set Sigma0 = {y = 0} and theta = 0 is the
    y-axis.  Supported cones:

    * full space R^d and the punctured space R^d minus the origin,
    * the complement of Sigma0,
    * the half space {y_k > 0} (requires k = 1),
    * open bands theta1 < theta < theta2.
    """

    kind: ConeKind
    theta1: float = 0.0
    theta2: float = HALF_PI

    def __post_init__(self) -> None:
        if self.kind is ConeKind.BAND:
            if not (0.0 <= self.theta1 < self.theta2 <= HALF_PI):
                raise ValueError(
                    "band needs 0 <= theta1 < theta2 <= pi/2, got "
                    f"({self.theta1}, {self.theta2})"
                )
        elif (self.theta1, self.theta2) != (0.0, HALF_PI):
            raise ValueError(f"{self.kind.value} cone carries the fixed interval (0, pi/2)")

    @classmethod
    def full_space(cls) -> "ConeSpec":
        return cls(ConeKind.FULL_SPACE)

    @classmethod
    def punctured_space(cls) -> "ConeSpec":
        return cls(ConeKind.PUNCTURED_SPACE)

    @classmethod
    def complement_sigma0(cls) -> "ConeSpec":
        return cls(ConeKind.COMPLEMENT_SIGMA0)

    @classmethod
    def half_space(cls) -> "ConeSpec":
        return cls(ConeKind.HALF_SPACE)

    @classmethod
    def band(cls, theta1: float, theta2: float) -> "ConeSpec":
        return cls(ConeKind.BAND, float(theta1), float(theta2))

    @property
    def cross_section_touches_sigma0(self) -> bool:
        """True if the closure of the spherical cross-section meets {y = 0}."""
        return self.kind is not ConeKind.BAND or self.theta2 == HALF_PI

    @property
    def contains_sigma0(self) -> bool:
        """True if the cone itself contains points of {y = 0} (minus the origin)."""
        return self.kind in (ConeKind.FULL_SPACE, ConeKind.PUNCTURED_SPACE)

    def describe(self) -> str:
        """Parseable name; band angles carry full precision for round trips."""
        if self.kind is ConeKind.BAND:
            return f"band:{self.theta1!r}:{self.theta2!r}"
        return self.kind.value


@dataclass(frozen=True)
class AdmissibilityReport:
    """Weight-integrability flags for a (parameters, cone) pair."""

    weight_integrable_punctured: bool
    weight_integrable_origin: bool
    sphere_weight_integrable: bool
    cone_admissible: bool
    muckenhoupt_Ap: bool
    superdegenerate: bool
    notes: list[str] = field(default_factory=list)


def weight_locally_integrable(params: HardyParams, beta: float, domain: str = "punctured") -> bool:
    """Local integrability of |y|^a |z|^(-beta).

    On the punctured space this only constrains the cylindrical factor
    (k + a > 0); on the whole space the radial integral near the origin adds
    d + a > beta.
    """
    ka = params.k + params.a
    if domain == "punctured":
        return ka > 0
    if domain == "whole_space":
        return ka > 0 and params.d + params.a > beta
    raise ValueError(f"domain must be 'punctured' or 'whole_space', got {domain!r}")


def sphere_weight_integrable(params: HardyParams) -> bool:
    """Integrability of the angular weight |Pi sigma|^a over the unit sphere."""
    return params.k + params.a > 0


def cone_admissible(params: HardyParams, cone: ConeSpec) -> AdmissibilityReport:
    """Decide whether the weighted inequality on the cone is well posed.

    A cone whose cross-section closure stays away from {y = 0} is admissible
    for every a; otherwise k + a > 0 is required, and the full space further
    needs d + a > p + b so that the left-hand weight is locally integrable at
    the origin.
    """
    if cone.kind is ConeKind.HALF_SPACE and params.k != 1:
        raise ValueError(f"half-space cone requires k = 1, got k={params.k}")

    ka = params.k + params.a
    notes: list[str] = []
    avoids = not cone.cross_section_touches_sigma0
    admissible = avoids or ka > 0
    if cone.kind is ConeKind.FULL_SPACE:
        admissible = ka > 0 and params.d + params.a > params.p + params.b
        if params.d + params.a <= params.p + params.b:
            notes.append("full space needs d+a > p+b (weight integrable at the origin)")
    if avoids:
        notes.append("cross-section closure avoids {y=0}; any a admissible")
    elif ka <= 0:
        notes.append("k+a <= 0: weight not integrable near {y=0}")

    superdeg = ka >= params.p
    if superdeg:
        notes.append("superdegenerate (k+a >= p): removing {y=0} does not change the constant")

    return AdmissibilityReport(
        weight_integrable_punctured=ka > 0,
        weight_integrable_origin=ka > 0 and params.d + params.a > params.b + params.p,
        sphere_weight_integrable=ka > 0,
        cone_admissible=admissible,
        muckenhoupt_Ap=0 < ka < params.p,
        superdegenerate=superdeg,
        notes=notes,
    )


def require_admissible(params: HardyParams, cone: ConeSpec) -> AdmissibilityReport:
    report = cone_admissible(params, cone)
    if not report.cone_admissible:
        raise AdmissibilityError(
            f"inadmissible cone {cone.describe()} for d={params.d}, k={params.k}, "
            f"p={params.p}, a={params.a}, b={params.b}: " + "; ".join(report.notes)
        )
    return report


@dataclass(frozen=True)
class ClosedForm:
    """A sharp constant known exactly, with a tag naming the solved case."""

    value: float
    source: str


def closed_form_constant(params: HardyParams, cone: ConeSpec) -> ClosedForm | None:
    """Sharp constant for every explicitly solved (cone, parameter) case.

    Returns None when no exact value is known (the spherical solver is then
    the only source).  Raises AdmissibilityError on inadmissible input.
    """
    require_admissible(params, cone)
    exponent = hardy_exponent(params)
    habs = exponent.H_abs_p
    d, k, p, a = params.d, params.k, params.p, params.a
    ka = k + a
    kind = cone.kind
    if kind is ConeKind.BAND and cone.theta1 == 0.0 and cone.theta2 == HALF_PI:
        kind = ConeKind.COMPLEMENT_SIGMA0  # same open cone, different spelling

    if kind is ConeKind.FULL_SPACE:
        # admissibility guarantees H > 0 here
        return ClosedForm(habs, "radial-full-space")
    if kind is ConeKind.PUNCTURED_SPACE:
        return ClosedForm(habs, "radial-punctured")
    if kind is ConeKind.COMPLEMENT_SIGMA0:
        if ka >= p:
            return ClosedForm(habs, "superdegenerate-collapse")
        if p == 2:
            value = (d - k) * max(2.0 - ka, 0.0) + exponent.H ** 2
            return ClosedForm(value, "sigma0-complement-p2")
        return None
    if kind is ConeKind.HALF_SPACE:
        if a >= p - 1:
            return ClosedForm(habs, "half-space-superdegenerate")
        if p == 2:
            value = (d - 1) * max(1.0 - a, 0.0) + exponent.H ** 2
            return ClosedForm(value, "half-space-p2")
        return None
    if kind is ConeKind.BAND and ka >= p and cone.theta2 == HALF_PI and cone.theta1 == 0.0:
        return ClosedForm(habs, "superdegenerate-collapse")
    return None


def cylindrical_constant(params: HardyParams) -> float:
    """Sharp constant ((k+a-p)/p)^p of the purely cylindrical inequality.

    Defined only for a > p - k; at the threshold a = p - k the constant
    vanishes and the weight |y|^(a-p) stops being locally integrable.
    """
    if params.a <= params.p - params.k:
        raise ValueError(
            f"cylindrical constant needs a > p - k, got a={params.a}, p-k={params.p - params.k}"
        )
    return ((params.k + params.a - params.p) / params.p) ** params.p
