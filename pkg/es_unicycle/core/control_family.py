"""
Family of extremum seeking control functions.

A law is a pair (F1, F2) with F1 F2' - F1' F2 = -1 away from the zeros of F1, a gain
vartheta, the frequency ratio k = omega / Omega and an amplitude scale. The control is
u(t) = scale * sqrt(vartheta * alpha * omega) * (F1(J) cos(omega t) + F2(J) sin(omega t)).
"""

import math
import warnings
from enum import Enum
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, Field
from scipy import integrate
from scipy.interpolate import CubicSpline

from es_unicycle.core.cost import CostFunction
from es_unicycle.utils.exceptions import DomainError, GuardBandError, ParameterError, QuadratureError
from es_unicycle.utils.logger import get_logger
from es_unicycle.utils.schema import Vec2

logger = get_logger(__name__)

GUARD_BAND = 1e-3
FD_STEP = 1e-6
QUAD_ABS_TOL = 1e-10
# Below this |J| the Cont4 phase is replaced by the limit value u = 0.
CONT4_CLAMP = 1e-300
# exp() overflows past ~709; the Cont4 amplitude is far below double precision there.
CONT4_CUTOFF = 700.0


class LawKind(str, Enum):
    """Built-in control laws plus user-assembled pairs."""
    CONT1 = "cont1"
    CONT2 = "cont2"
    CONT3 = "cont3"
    CONT4 = "cont4"
    CUSTOM = "custom"


class FPair(BaseModel):
    """
    Shaping functions (F1, F2) of one control law.

    ``dS`` is the derivative of F1^2 + F2^2 when known in closed form. ``zero_distance``
    returns the distance from z to the nearest zero of F1. ``singular_points`` lists the
    z values where F1(J(x)), F2(J(x)) stop being differentiable in x. ``domain`` is the open
    z-interval on which the Wronskian identity holds.
    """

    name: str
    F1: Callable[[float], float]
    F2: Callable[[float], float]
    dS: Optional[Callable[[float], float]] = None
    zero_distance: Callable[[float], float]
    singular_points: List[float] = Field(default_factory=list)
    domain: Tuple[float, float] = (-math.inf, math.inf)
    zero_set_note: str = ""

    class Config:
        allow_mutation = False
        arbitrary_types_allowed = True

    def values(self, z: float) -> Tuple[float, float]:
        return self.F1(z), self.F2(z)

    def sum_of_squares_derivative(self, z: float) -> float:
        """d(F1^2 + F2^2)/dz, closed form when available, else central differences."""
        if self.dS is not None:
            return self.dS(z)
        check_admissible(self, z, guard=GUARD_BAND)

        def s(w):
            a, b = self.F1(w), self.F2(w)
            return a * a + b * b

        return (s(z + FD_STEP) - s(z - FD_STEP)) / (2.0 * FD_STEP)

    def in_domain(self, z: float) -> bool:
        lo, hi = self.domain
        return lo < z < hi


# Built-in pairs

def _cont1_pair() -> FPair:
    return FPair(
        name="cont1",
        F1=lambda z: z,
        F2=lambda z: 1.0,
        dS=lambda z: 2.0 * z,
        zero_distance=abs,
        zero_set_note="Z* = {0}",
    )


def _cont2_pair() -> FPair:
    return FPair(
        name="cont2",
        F1=math.sin,
        F2=math.cos,
        dS=lambda z: 0.0,
        zero_distance=lambda z: abs(z - math.pi * round(z / math.pi)),
        zero_set_note="Z* = {n pi : n integer}",
    )


def _sqrt_log_f1(z: float) -> float:
    a = abs(z)
    if a == 0.0:
        return 0.0
    return math.sqrt(a) * math.sin(math.log(a))


def _sqrt_log_f2(z: float) -> float:
    a = abs(z)
    if a == 0.0:
        return 0.0
    return math.sqrt(a) * math.cos(math.log(a))


def _sqrt_log_zero_distance(z: float) -> float:
    a = abs(z)
    if a == 0.0:
        return 0.0
    n = math.floor(math.log(a) / math.pi)
    candidates = [a, abs(a - math.exp(n * math.pi)), abs(a - math.exp((n + 1) * math.pi))]
    return min(candidates)


def _cont3_pair() -> FPair:
    return FPair(
        name="cont3",
        F1=_sqrt_log_f1,
        F2=_sqrt_log_f2,
        dS=lambda z: math.copysign(1.0, z) if z != 0.0 else 0.0,
        zero_distance=_sqrt_log_zero_distance,
        singular_points=[0.0],
        domain=(0.0, math.inf),
        zero_set_note="Z* = {0} and {+-exp(n pi)}; F1, F2 extended by 0 at z = 0",
    )


def cont4_amplitude(z: float) -> float:
    """phi(J) = (1 - exp(-|J|)) / (1 + exp(|J|))."""
    a = abs(z)
    if a < CONT4_CLAMP or a > CONT4_CUTOFF:
        return 0.0
    return -math.expm1(-a) / (1.0 + math.exp(a))


def cont4_phase(z: float) -> float:
    """psi(J) = exp(|J|) + 2 ln(exp(|J|) - 1), defined for J != 0."""
    a = abs(z)
    return math.exp(a) + 2.0 * math.log(math.expm1(a))


def _cont4_f1(z: float) -> float:
    a = abs(z)
    if a < CONT4_CLAMP or a > CONT4_CUTOFF:
        return 0.0
    return math.sqrt(cont4_amplitude(a)) * math.sin(cont4_phase(a))


def _cont4_f2(z: float) -> float:
    a = abs(z)
    if a < CONT4_CLAMP or a > CONT4_CUTOFF:
        return 0.0
    return math.sqrt(cont4_amplitude(a)) * math.cos(cont4_phase(a))


def _cont4_ds(z: float) -> float:
    a = abs(z)
    if a > CONT4_CUTOFF:
        return 0.0
    e = math.exp(a)
    d = (2.0 + 1.0 / e - e) / ((1.0 + e) ** 2)
    return d if z >= 0.0 else -d


def _cont4_zero_distance(z: float) -> float:
    a = abs(z)
    if a < CONT4_CLAMP:
        return 0.0
    if a > CONT4_CUTOFF:
        return math.inf
    psi = cont4_phase(a)
    e = math.exp(a)
    dpsi = e * (e + 1.0) / math.expm1(a)
    m = round(psi / math.pi)
    return min(a, abs(psi - m * math.pi) / dpsi)


def _cont4_pair() -> FPair:
    return FPair(
        name="cont4",
        F1=_cont4_f1,
        F2=_cont4_f2,
        dS=_cont4_ds,
        zero_distance=_cont4_zero_distance,
        singular_points=[0.0],
        domain=(0.0, math.inf),
        zero_set_note="Z* = {0} and {z : psi(z) = m pi}; u = 0 for J = 0",
    )


_BUILTIN_PAIRS: Dict[LawKind, Callable[[], FPair]] = {
    LawKind.CONT1: _cont1_pair,
    LawKind.CONT2: _cont2_pair,
    LawKind.CONT3: _cont3_pair,
    LawKind.CONT4: _cont4_pair,
}

# The bounded law carries sqrt(alpha omega / 2) instead of sqrt(alpha omega).
_BUILTIN_SCALES: Dict[LawKind, float] = {
    LawKind.CONT1: 1.0,
    LawKind.CONT2: 1.0 / math.sqrt(2.0),
    LawKind.CONT3: 1.0,
    LawKind.CONT4: 1.0,
}


def builtin_pair(kind: LawKind) -> FPair:
    kind = LawKind(kind)
    if kind not in _BUILTIN_PAIRS:
        raise ParameterError(f"No built-in pair for {kind.value}")
    return _BUILTIN_PAIRS[kind]()


def structural_alpha(k: int) -> float:
    """alpha = 4 (1 - k^-2)."""
    return 4.0 * (1.0 - 1.0 / (k * k))


class ControlLaw(BaseModel):
    """Dither-modulated extremum seeking law built on an F-pair."""

    pair: FPair
    vartheta: float = Field(..., gt=0.0, description="Gain")
    k: int = Field(..., ge=2, description="Frequency ratio omega / Omega")
    Omega: float = Field(..., gt=0.0, description="Heading angular velocity (rad/s)")
    amplitude_scale: float = Field(default=1.0, gt=0.0)
    alpha_tuned: Optional[float] = Field(default=None, gt=0.0, description="Experimentally tuned alpha")
    kind: LawKind = LawKind.CUSTOM

    class Config:
        allow_mutation = False
        arbitrary_types_allowed = True

    @property
    def omega(self) -> float:
        return self.k * self.Omega

    @property
    def alpha(self) -> float:
        return structural_alpha(self.k)

    @property
    def alpha_used(self) -> float:
        return self.alpha_tuned if self.alpha_tuned is not None else self.alpha

    @property
    def amplitude(self) -> float:
        """scale * sqrt(vartheta * alpha * omega)."""
        return self.amplitude_scale * math.sqrt(self.vartheta * self.alpha_used * self.omega)

    @property
    def descent_gain(self) -> float:
        """Gain g of the averaged descent term -g grad J."""
        return self.amplitude_scale ** 2 * self.vartheta * self.alpha_used / self.alpha

    @property
    def input_bound(self) -> float:
        """sup |u| for pairs with F1^2 + F2^2 <= 1 (the bounded law)."""
        return self.amplitude

    def u(self, t: float, J: float) -> float:
        wt = self.omega * t
        return self.amplitude * (self.pair.F1(J) * math.cos(wt) + self.pair.F2(J) * math.sin(wt))

    def rotation_field(self, J: float, grad: Tuple[float, float]) -> Tuple[float, float]:
        """Phi = (g / 2k) S'(J) (dJ/dx2, -dJ/dx1)."""
        c = self.descent_gain / (2.0 * self.k) * self.pair.sum_of_squares_derivative(J)
        return c * grad[1], -c * grad[0]


def make_builtin_law(
    kind: LawKind,
    vartheta: float,
    k: int,
    Omega: float,
    amplitude_scale: Optional[float] = None,
    alpha: Optional[float] = None,
) -> ControlLaw:
    """
    Build one of the four built-in laws.

    Args:
        kind: cont1 .. cont4
        vartheta: Gain (> 0)
        k: Frequency ratio (integer >= 2)
        Omega: Heading angular velocity (> 0)
        amplitude_scale: Override of the per-law scale (1/sqrt(2) for cont2, else 1)
        alpha: Tuned alpha replacing 4(1 - k^-2) in the amplitude

    Returns:
        Control law

    Raises:
        ParameterError: k < 2, vartheta <= 0 or Omega <= 0
    """
    kind = LawKind(kind)
    _check_law_parameters(vartheta, k, Omega)
    scale = _BUILTIN_SCALES[kind] if amplitude_scale is None else amplitude_scale
    return ControlLaw(
        pair=builtin_pair(kind),
        vartheta=vartheta,
        k=int(k),
        Omega=Omega,
        amplitude_scale=scale,
        alpha_tuned=alpha,
        kind=kind,
    )


def _check_law_parameters(vartheta: float, k: int, Omega: float) -> None:
    if int(k) != k or k < 2:
        raise ParameterError(f"k must be an integer >= 2, got {k!r}")
    if not vartheta > 0.0:
        raise ParameterError(f"vartheta must be positive, got {vartheta!r}")
    if not Omega > 0.0:
        raise ParameterError(f"Omega must be positive, got {Omega!r}")


def eval_control(law: ControlLaw, t: float, J_value: float) -> float:
    """u(t) for the measured cost value J_value."""
    return law.u(t, J_value)


# Numeric members of the family

def _ensure_zero_free(
    F1: Callable[[float], float],
    z_ref: float,
    z: float,
    zeros: Optional[Sequence[float]] = None,
    samples: int = 513,
) -> None:
    lo, hi = min(z_ref, z), max(z_ref, z)
    for z0 in zeros or ():
        if lo <= z0 <= hi:
            raise DomainError(f"F1 vanishes at {z0!r} between z_ref={z_ref!r} and z={z!r}")
    grid = np.linspace(z_ref, z, samples)
    vals = np.array([F1(w) for w in grid])
    if np.any(vals == 0.0) or np.any(np.sign(vals[1:]) != np.sign(vals[:-1])):
        raise DomainError(f"F1 changes sign between z_ref={z_ref!r} and z={z!r}")


def _inverse_square_integral(F1: Callable[[float], float], a: float, b: float) -> float:
    if a == b:
        return 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            value, _ = integrate.quad(
                lambda s: 1.0 / F1(s) ** 2, a, b, epsabs=QUAD_ABS_TOL, epsrel=1e-12, limit=200
            )
        except (integrate.IntegrationWarning, ZeroDivisionError) as e:
            raise QuadratureError(f"Quadrature of 1/F1^2 on [{a!r}, {b!r}] failed: {e}") from e
    return value


def derive_F2_numeric(
    F1: Callable[[float], float],
    z_ref: float,
    c0: float,
    zeros: Optional[Sequence[float]] = None,
) -> Callable[[float], float]:
    """
    Companion function F2(z) = -F1(z) (c0 + int_{z_ref}^{z} ds / F1(s)^2).

    Args:
        F1: First shaping function
        z_ref: Lower limit of the antiderivative, inside a zero-free interval of F1
        c0: Integration constant selecting a member of the family
        zeros: Known zeros of F1, checked in addition to a sign scan

    Returns:
        F2 as a callable; calling it across a zero of F1 raises DomainError
    """
    if F1(z_ref) == 0.0:
        raise DomainError(f"F1 vanishes at z_ref={z_ref!r}")

    def F2(z: float) -> float:
        _ensure_zero_free(F1, z_ref, z, zeros)
        return -F1(z) * (c0 + _inverse_square_integral(F1, z_ref, z))

    return F2


def tabulate_F2(
    F1: Callable[[float], float],
    z_ref: float,
    c0: float,
    z_lo: float,
    z_hi: float,
    nodes: int = 2001,
) -> Callable[[float], float]:
    """
    Cubic-spline table of the numeric F2 on a zero-free interval [z_lo, z_hi].

    Simulations evaluate F2 millions of times, so the quadrature runs once per node.
    """
    if not z_lo < z_ref < z_hi:
        raise ParameterError(f"z_ref={z_ref!r} must lie inside ({z_lo!r}, {z_hi!r})")
    _ensure_zero_free(F1, z_lo, z_hi, samples=4 * nodes + 1)
    grid = np.unique(np.append(np.linspace(z_lo, z_hi, nodes), z_ref))
    pieces = [_inverse_square_integral(F1, a, b) for a, b in zip(grid[:-1], grid[1:])]
    cumulative = np.concatenate([[0.0], np.cumsum(pieces)])
    cumulative -= cumulative[int(np.searchsorted(grid, z_ref))]
    values = -np.array([F1(w) for w in grid]) * (c0 + cumulative)
    spline = CubicSpline(grid, values)

    def F2(z: float) -> float:
        if not z_lo <= z <= z_hi:
            raise DomainError(f"z={z!r} outside tabulated interval [{z_lo!r}, {z_hi!r}]")
        return float(spline(z))

    return F2


# Named F1 catalog for custom laws: (F1, zero distance)
F1_CATALOG: Dict[str, Tuple[Callable[[float], float], Callable[[float], float]]] = {
    "linear": (lambda z: z, abs),
    "sine": (math.sin, lambda z: abs(z - math.pi * round(z / math.pi))),
    "sqrt_log_sine": (_sqrt_log_f1, _sqrt_log_zero_distance),
    "tanh": (math.tanh, abs),
}


def make_custom_law(
    f1_name: str,
    z_ref: float,
    c0: float,
    vartheta: float,
    k: int,
    Omega: float,
    z_lo: float,
    z_hi: float,
    amplitude_scale: float = 1.0,
    alpha: Optional[float] = None,
) -> ControlLaw:
    """
    Law from a catalog F1 and a numerically derived F2 on [z_lo, z_hi].

    Raises:
        ParameterError: unknown catalog name or invalid law parameters
        DomainError: F1 has a zero inside [z_lo, z_hi]
    """
    if f1_name not in F1_CATALOG:
        raise ParameterError(f"Unknown F1 {f1_name!r}; choose from {sorted(F1_CATALOG)}")
    _check_law_parameters(vartheta, k, Omega)
    F1, zero_distance = F1_CATALOG[f1_name]
    F2 = tabulate_F2(F1, z_ref, c0, z_lo, z_hi)
    pair = FPair(
        name=f"custom:{f1_name}",
        F1=F1,
        F2=F2,
        zero_distance=zero_distance,
        domain=(z_lo, z_hi),
        zero_set_note=f"numeric F2 on [{z_lo!r}, {z_hi!r}], z_ref={z_ref!r}, c0={c0!r}",
    )
    logger.info(f"Built custom law {pair.name} on [{z_lo}, {z_hi}]")
    return ControlLaw(
        pair=pair,
        vartheta=vartheta,
        k=int(k),
        Omega=Omega,
        amplitude_scale=amplitude_scale,
        alpha_tuned=alpha,
        kind=LawKind.CUSTOM,
    )


# Verification helpers

def check_admissible(pair: FPair, z: float, guard: float = GUARD_BAND) -> None:
    """Raise unless z lies in the pair's domain and outside the guard band of Z*."""
    if not pair.in_domain(z):
        raise DomainError(f"z={z!r} outside the domain {pair.domain} of {pair.name}")
    d = pair.zero_distance(z)
    if d < guard:
        raise GuardBandError(
            f"z={z!r} is {d:.3e} from a zero of F1 for {pair.name} (guard band {guard:g})", z=z
        )


def admissible_grid(pair: FPair, lo: float, hi: float, n: int, guard: float = GUARD_BAND) -> np.ndarray:
    """Uniform grid on [lo, hi] with the inadmissible points dropped."""
    grid = np.linspace(lo, hi, n)
    keep = []
    for z in grid:
        if pair.in_domain(z - FD_STEP) and pair.in_domain(z + FD_STEP) and pair.zero_distance(z) >= guard:
            keep.append(z)
    return np.array(keep)


def wronskian_residual(pair: FPair, z_grid: Sequence[float]) -> float:
    """
    max |F1 F2' - F1' F2 + 1| over the grid, derivatives by central differences.

    Raises:
        GuardBandError: a grid point lies within the guard band of a zero of F1
        DomainError: a grid point lies outside the pair's domain
    """
    h = FD_STEP
    worst = 0.0
    for z in z_grid:
        z = float(z)
        check_admissible(pair, z)
        if not (pair.in_domain(z - h) and pair.in_domain(z + h)):
            raise DomainError(f"Difference stencil at z={z!r} leaves the domain of {pair.name}")
        f1, f2 = pair.F1(z), pair.F2(z)
        d1 = (pair.F1(z + h) - pair.F1(z - h)) / (2.0 * h)
        d2 = (pair.F2(z + h) - pair.F2(z - h)) / (2.0 * h)
        worst = max(worst, abs(f1 * d2 - d1 * f2 + 1.0))
    return worst


def phi_field(law: ControlLaw, cost: CostFunction, x: Vec2, t: float) -> Vec2:
    """
    Rotational part Phi of the averaged field, orthogonal to grad J.

    Raises:
        GuardBandError: custom pair evaluated where F1 o J is not differentiable
    """
    J = cost.value(x.x1, x.x2, t)
    p1, p2 = law.rotation_field(J, cost.gradient(x.x1, x.x2, t))
    return Vec2(x1=p1, x2=p2)
