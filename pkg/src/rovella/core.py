"""Contracting Lorenz geometry: the 1-D map, the skew-product return map,
and the linearized local flow they are built from.

The cross-section is the square Q = [-1/2, 1/2]^2 at the top of the unit
cube. Near the singularity the vector field is linear with rates
(lambda1, lambda2, lambda3); a point (x, y) on the top section exits the
cube through a side section, travels around a wing, and lands back on Q.
The composition of the local transit with the outer rotation, expansion
and translation is the return map

    F(x, y) = (T(x), G(x, y)),
    T(x) = -rho |x|^s + 1/2   (x > 0),   rho |x|^s - 1/2   (x < 0),
    G(x, y) = y |x|^r + c0    (x > 0),  -y |x|^r + c1      (x < 0),

with r = -lambda2/lambda1 and s = -lambda3/lambda1. Everything here is a
pure function of its arguments; all values are plain float64.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

# Below this the point is treated as lying on the stable manifold x = 0.
SINGULAR_EPS = 1e-300


class ParamError(ValueError):
    """A RovellaParams / EigenTriple invariant failed; message names it."""


class SingularPointError(ValueError):
    """Evaluation at x = 0 (or within SINGULAR_EPS of it)."""


@dataclass(frozen=True)
class EigenTriple:
    """Eigenvalues of the linear field at the origin, -l2 > -l3 > l1 > 0."""

    lambda1: float
    lambda2: float
    lambda3: float

    @property
    def r(self) -> float:
        return -self.lambda2 / self.lambda1

    @property
    def s(self) -> float:
        return -self.lambda3 / self.lambda1

    def validate(self) -> "EigenTriple":
        if not self.lambda1 > 0:
            raise ParamError("lambda1 > 0 violated")
        if not -self.lambda3 > self.lambda1:
            raise ParamError("-lambda3 > lambda1 violated")
        if not -self.lambda2 > -self.lambda3:
            raise ParamError("-lambda2 > -lambda3 violated")
        if not self.r > self.s + 3:
            raise ParamError("r > s+3 violated")
        return self


@dataclass(frozen=True)
class RovellaParams:
    """Full parameter set: eigenvalues, wing expansion rho, fiber offsets."""

    eigen: EigenTriple
    rho: float
    c0: float
    c1: float

    @property
    def r(self) -> float:
        return self.eigen.r

    @property
    def s(self) -> float:
        return self.eigen.s


@dataclass(frozen=True)
class PointQ:
    """Point of the cross-section square Q = [-1/2, 1/2]^2."""

    x: float
    y: float

    def __post_init__(self):
        if not (abs(self.x) <= 0.5 and abs(self.y) <= 0.5):
            raise ParamError("point outside Q")


@dataclass(frozen=True)
class FlowState:
    """Point of the unit cube together with elapsed flow time."""

    x: float
    y: float
    z: float
    t: float = 0.0

    def __post_init__(self):
        if max(abs(self.x), abs(self.y), abs(self.z)) > 1.0 + 1e-12:
            raise ParamError("state outside the cube")
        if self.t < 0:
            raise ParamError("negative elapsed time")


def validate_params(p: RovellaParams) -> RovellaParams:
    """Check every invariant; raises ParamError naming the first violation.

    Returns the validated instance unchanged (r, s are derived
    properties, so nothing needs to be cached).
    """
    p.eigen.validate()
    if not p.rho > 0:
        raise ParamError("rho > 0 violated")
    if not p.rho * 0.5 ** p.s <= 1.0:
        raise ParamError("rho*(1/2)^s <= 1 violated")
    half_width = 0.5 ** (p.r + 1)  # max fiber displacement |y| |x|^r
    if not abs(p.c0) + half_width <= 0.5:
        raise ParamError("|c0| + (1/2)^(r+1) <= 1/2 violated")
    if not abs(p.c1) + half_width <= 0.5:
        raise ParamError("|c1| + (1/2)^(r+1) <= 1/2 violated")
    if not abs(p.c0 - p.c1) > 2.0 * half_width:
        raise ParamError("fiber images of the two halves not disjoint")
    return p


def default_params() -> RovellaParams:
    """The canonical checkable instance: a full Rovella map.

    rho = 2^s makes T map each half onto the whole interval (T is then
    topologically conjugate to the doubling map); the offsets are one
    admissible choice keeping the wing images inside Q and disjoint.
    """
    eigen = EigenTriple(lambda1=1.0, lambda2=-5.0, lambda3=-1.2)
    return validate_params(
        RovellaParams(eigen=eigen, rho=2.0 ** 1.2, c0=0.25, c1=-0.25)
    )


def _check_x(x: float) -> None:
    if abs(x) < SINGULAR_EPS:
        raise SingularPointError("x = 0 is the singular point of the map")


def eval_T(p: RovellaParams, x: float) -> float:
    """One step of the 1-D map. x must be nonzero and inside [-1/2, 1/2]."""
    _check_x(x)
    if abs(x) > 0.5:
        raise ParamError("x outside [-1/2, 1/2]")
    if x > 0:
        return -p.rho * x ** p.s + 0.5
    return p.rho * (-x) ** p.s - 0.5


def eval_T_deriv(p: RovellaParams, x: float, order: int = 1) -> float:
    """Closed-form derivative of the branch formula, order 1, 2 or 3.

    T' = -rho s |x|^(s-1) on both branches (negative everywhere),
    T'' = -sign(x) rho s (s-1) |x|^(s-2),
    T''' = -rho s (s-1) (s-2) |x|^(s-3).
    """
    _check_x(x)
    s, rho = p.s, p.rho
    ax = abs(x)
    if order == 1:
        return -rho * s * ax ** (s - 1.0)
    if order == 2:
        return -math.copysign(1.0, x) * rho * s * (s - 1.0) * ax ** (s - 2.0)
    if order == 3:
        return -rho * s * (s - 1.0) * (s - 2.0) * ax ** (s - 3.0)
    raise ValueError("order must be 1, 2 or 3")


def schwarzian(p: RovellaParams, x: float) -> float:
    """Schwarzian derivative T'''/T' - (3/2)(T''/T')^2.

    For the power-law branches this collapses to -(s-1)(s+1)/(2 x^2),
    negative for every x != 0.
    """
    d1 = eval_T_deriv(p, x, 1)
    d2 = eval_T_deriv(p, x, 2)
    d3 = eval_T_deriv(p, x, 3)
    return d3 / d1 - 1.5 * (d2 / d1) ** 2


def eval_G(p: RovellaParams, x: float, y: float) -> float:
    """Fiber component of the return map."""
    _check_x(x)
    if x > 0:
        return y * x ** p.r + p.c0
    return -y * (-x) ** p.r + p.c1


def eval_F(p: RovellaParams, q: PointQ) -> PointQ:
    """The 2-D Poincare return map F(x, y) = (T(x), G(x, y))."""
    return PointQ(eval_T(p, q.x), eval_G(p, q.x, q.y))


def local_flow_map(e: EigenTriple, x: float, y: float,
                   epsilon: float = 1.0) -> FlowState:
    """Linear transit from the top section z = epsilon to the side x = +-epsilon.

    Integrating (l1 x, l2 y, l3 z) from (x, y, epsilon) until |x| reaches
    epsilon gives exit point

        (sign(x) eps,  eps^-r y |x|^r,  eps^(1-s) |x|^s)

    with transit time (log eps - log|x|) / l1, returned in the t field.
    With epsilon = 1 (the cube normalization) this is (sign(x), y|x|^r, |x|^s).
    """
    if abs(x) < SINGULAR_EPS:
        raise SingularPointError(
            "x = 0 lies on the stable manifold; the orbit falls into the singularity"
        )
    if abs(x) > epsilon:
        raise ParamError("|x| must not exceed the section half-width epsilon")
    ax = abs(x)
    r, s = e.r, e.s
    return FlowState(
        x=math.copysign(epsilon, x),
        y=epsilon ** (-r) * y * ax ** r,
        z=epsilon ** (1.0 - s) * ax ** s,
        t=return_time_local(e, x, epsilon),
    )


def return_time_local(e: EigenTriple, x: float, epsilon: float = 1.0) -> float:
    """Transit time (log eps - log|x|) / lambda1 of the linear region."""
    if abs(x) < SINGULAR_EPS:
        raise SingularPointError("transit time from x = 0 is infinite")
    if abs(x) > epsilon:
        raise ParamError("|x| must not exceed epsilon")
    return (math.log(epsilon) - math.log(abs(x))) / e.lambda1


# Outer-wing pieces. Each wing applies a rotation taking the side section
# back onto the plane z = 1, an expansion of the first coordinate, and a
# translation. The right wing uses the rotation matrix
# [[0,0,1],[0,1,0],[1,0,0]]; the left wing turns the ribbon over, which
# flips the fiber coordinate as well: [[0,0,-1],[0,-1,0],[-1,0,0]]. The
# expansion carries -rho on both wings, making each branch of the induced
# 1-D map orientation-reversing.

_ROT_PLUS = ((0.0, 0.0, 1.0), (0.0, 1.0, 0.0), (1.0, 0.0, 0.0))
_ROT_MINUS = ((0.0, 0.0, -1.0), (0.0, -1.0, 0.0), (-1.0, 0.0, 0.0))


def _apply(m, v):
    return tuple(sum(m[i][j] * v[j] for j in range(3)) for i in range(3))


def rotation_matrix(side: int):
    """Wing rotation for side +1 (x = 1 section) or -1 (x = -1 section)."""
    if side == 1:
        return _ROT_PLUS
    if side == -1:
        return _ROT_MINUS
    raise ValueError("side must be +1 or -1")


def expansion_matrix(rho_signed: float):
    """Diagonal expansion of the first coordinate; the others are fixed."""
    return ((rho_signed, 0.0, 0.0), (0.0, 1.0, 0.0), (0.0, 0.0, 1.0))


def global_return(p: RovellaParams, state: FlowState) -> PointQ:
    """Wing composition rotation -> expansion -> translation, back onto Q.

    Defined for points of the side sections x = +-1. Composed with
    local_flow_map it reproduces eval_F exactly.
    """
    if abs(abs(state.x) - 1.0) > 1e-12:
        raise ParamError("global return is defined on the sections x = +-1")
    side = 1 if state.x > 0 else -1
    v = _apply(rotation_matrix(side), (state.x, state.y, state.z))
    v = _apply(expansion_matrix(-p.rho), v)
    if side == 1:
        return PointQ(v[0] + 0.5, v[1] + p.c0)
    return PointQ(v[0] - 0.5, v[1] + p.c1)


def truncated_distance(delta: float, x: float, y: float) -> float:
    """Distance capped to 1 outside radius delta: |x-y| if <= delta, else 1."""
    if not delta > 0:
        raise ValueError("delta must be positive")
    d = abs(x - y)
    return d if d <= delta else 1.0
