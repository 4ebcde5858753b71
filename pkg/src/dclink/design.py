"""Controller and weight constructions for the inner/outer architecture.

The inner current loop shapes 1/(sL) into a unity-DC-gain low-pass with a
notch at the line-ripple frequency (120 Hz); the outer pair (Kv for
voltage, Kr for current-reference tracking) is the published sixth-order
design, transcribed from its factored form.  Also here: the mixed-
sensitivity generalized plant, its weighted closed loop, the sensitivity
family used by the power-sharing theorem, and the droop filter.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import InternalInstabilityError
from .lti import (
    RIPPLE_OMEGA,
    FrequencyGrid,
    StateSpace,
    TransferFunction,
    freq_response_many,
    is_stable,
    modal_ss,
    poly_add,
    poly_mul,
    poly_scale,
    ss_stack_matrix,
    tf,
    tf_constant,
    tf_feedback,
    tf_sensitivity,
    tf_series,
)

__all__ = [
    "InnerDesign",
    "OuterControllers",
    "WeightSet",
    "GeneralizedPlant",
    "SensitivityFamily",
    "RatioReport",
    "shaped_plant",
    "design_inner",
    "canonical_inner_design",
    "canonical_outer",
    "canonical_weights",
    "bus_voltage_plant",
    "generalized_plant",
    "closed_loop_char_poly",
    "weighted_closed_loop",
    "sensitivity_family",
    "controller_ratio_analysis",
    "droop_filter",
]


@dataclass(frozen=True)
class InnerDesign:
    """Inner-loop shaping parameters: notch damping pair and low-pass corner."""

    zeta1: float
    zeta2: float
    omega_tilde: float
    omega0: float = RIPPLE_OMEGA

    def __post_init__(self):
        if not 0.0 < self.zeta1 < self.zeta2:
            raise ValueError(f"need 0 < zeta1 < zeta2, got {self.zeta1}, {self.zeta2}")
        if not self.omega0 > 0.0:
            raise ValueError(f"omega0 must be positive, got {self.omega0}")
        if not self.omega_tilde > self.omega0:
            raise ValueError(
                f"omega_tilde must exceed omega0, got {self.omega_tilde} <= {self.omega0}"
            )

    @property
    def notch_ratio(self) -> float:
        return self.zeta1 / self.zeta2


def canonical_inner_design() -> InnerDesign:
    """The published single-converter inner design (zeta 1.2/2.1, 200 Hz corner)."""
    return InnerDesign(zeta1=1.2, zeta2=2.1, omega_tilde=2.0 * np.pi * 200.0)


def shaped_plant(d: InnerDesign) -> TransferFunction:
    """Target inner closed loop: first-order low-pass times a biquad notch."""
    w0, wt = d.omega0, d.omega_tilde
    lowpass = tf([wt], [1.0, wt])
    notch = tf(
        [1.0, 2.0 * d.zeta1 * w0, w0 * w0],
        [1.0, 2.0 * d.zeta2 * w0, w0 * w0],
    )
    return tf_series(lowpass, notch)


def design_inner(L: float, d: InnerDesign) -> TransferFunction:
    """Second-order inner controller that closes 1/(sL) into shaped_plant(d).

    The closed-loop identity is re-verified on every call; a mismatch would
    indicate coefficient corruption and raises.
    """
    if not L > 0:
        raise ValueError(f"inductance must be positive, got {L}")
    w0, wt = d.omega0, d.omega_tilde
    num = poly_scale([1.0, 2.0 * d.zeta1 * w0, w0 * w0], L * wt)
    den = [1.0, 2.0 * d.zeta2 * w0, w0 * w0 + 2.0 * (d.zeta2 - d.zeta1) * w0 * wt]
    kc = tf(num, den)
    closed = tf_feedback(tf_series(kc, tf([1.0], [L, 0.0])))
    target = shaped_plant(d)
    n = np.zeros(max(closed.num.size, target.num.size))
    n[-closed.num.size:] = closed.num
    n[-target.num.size:] -= target.num
    dd = np.zeros(max(closed.den.size, target.den.size))
    dd[-closed.den.size:] = closed.den
    dd[-target.den.size:] -= target.den
    scale = max(np.abs(target.num).max(), np.abs(target.den).max())
    if max(np.abs(n).max(), np.abs(dd).max()) > 1e-9 * scale:
        raise AssertionError("inner-loop closure does not reproduce the shaped plant")
    return kc


@dataclass(frozen=True)
class OuterControllers:
    """Voltage controller kv and current-reference controller kr."""

    kv: TransferFunction
    kr: TransferFunction

    def __post_init__(self):
        for name, k in (("kv", self.kv), ("kr", self.kr)):
            if not k.is_proper:
                raise ValueError(f"{name} must be proper")
            if not is_stable(k):
                raise ValueError(f"{name} must be stable")


def _factored(gain, factors) -> TransferFunction:
    out = tf_constant(gain)
    for num, den in factors:
        out = tf_series(out, tf(num, den))
    return out


def canonical_outer() -> OuterControllers:
    """The published sixth-order outer controllers, expanded from factored form."""
    kv = _factored(
        -0.0076,
        [
            ([1.0, -8.69e5], [1.0, 2.73e4]),
            ([1.0, 2.01e4], [1.0, 1.07e4]),
            ([1.0, 2577.0], [1.0, 433.9]),
            ([1.0, 194.2], [1.0, 2.498]),
            ([1.0, 0.02, 0.0001], [1.0, 0.01978, 0.0008]),
        ],
    )
    kr = _factored(
        0.065,
        [
            ([1.0, 4.07e5], [1.0, 1.15e4]),
            ([1.0, 2474.0], [1.0, 422.4]),
            ([1.0, 191.7], [1.0, 3.11]),
            ([1.0, 3.20], [1.0, 2.03]),
            (poly_mul([1.0, 0.01], [1.0, 0.0099]), [1.0, 0.01978, 0.0008]),
        ],
    )
    return OuterControllers(kv=kv, kr=kr)


@dataclass(frozen=True)
class WeightSet:
    """Mixed-sensitivity weights; w1/w2 press tracking errors down at low
    frequency, w3 caps control effort, w4 is a high-pass on the load-to-bus
    path."""

    w1: TransferFunction
    w2: TransferFunction
    w3: TransferFunction
    w4: TransferFunction

    def __post_init__(self):
        for name, w in (("w1", self.w1), ("w2", self.w2)):
            dc = abs(np.polyval(w.num, 0.0) / np.polyval(w.den, 0.0))
            if dc <= 1.0:
                raise ValueError(f"{name} must have DC gain above unity, got {dc}")
        if not self.w3.is_proper:
            raise ValueError("w3 must be proper")
        lo = abs(np.polyval(self.w4.num, 0.0) / np.polyval(self.w4.den, 0.0))
        hi_num = self.w4.num[0] if self.w4.degree_num == self.w4.degree_den else 0.0
        if not lo < abs(hi_num):
            raise ValueError("w4 must be a high-pass (small at DC, finite at infinity)")


DEFAULT_W4_GAIN = 0.5
DEFAULT_W4_CORNER = 2.0 * np.pi * 500.0


def canonical_weights(w4: Optional[TransferFunction] = None) -> WeightSet:
    """Published weights; w4 was not printed, defaulting to a first-order
    high-pass 0.5*s/(s + 2*pi*500) and overridable."""
    if w4 is None:
        w4 = tf([DEFAULT_W4_GAIN, 0.0], [1.0, DEFAULT_W4_CORNER])
    return WeightSet(
        w1=tf(poly_scale([1.0, 502.7], 0.5), [1.0, 2.513]),
        w2=tf(poly_scale([1.0, 628.3], 0.5), [1.0, 3.142]),
        w3=tf_constant(0.1),
        w4=w4,
    )


def bus_voltage_plant(C: float) -> TransferFunction:
    """Integrator 1/(sC): total injected current to DC-link voltage."""
    if not C > 0:
        raise ValueError(f"capacitance must be positive, got {C}")
    return tf([1.0], [C, 0.0])


@dataclass(frozen=True)
class GeneralizedPlant:
    """Six-output stacked plant (z1..z4, e1, e2) from (V_ref, i_load, u~).

    `entries` is the 6x3 transfer-function array; the building blocks are
    retained so the loop can be closed without uncancelled integrator
    factors.
    """

    entries: tuple
    gv: TransferFunction
    gc: TransferFunction
    weights: WeightSet

    N_OUTPUTS = 6
    N_INPUTS = 3


def generalized_plant(
    gv: TransferFunction, gc_tilde: TransferFunction, w: WeightSet
) -> GeneralizedPlant:
    """Fill the stacked-plant pattern; zeros stay structurally zero."""
    zero = tf_constant(0.0)
    one = tf_constant(1.0)
    gvgc = tf_series(gv, gc_tilde)
    rows = (
        (w.w1, tf_series(w.w1, gv), -tf_series(w.w1, gvgc)),
        (zero, w.w2, -tf_series(w.w2, gc_tilde)),
        (zero, zero, w.w3),
        (zero, -tf_series(w.w4, gv), tf_series(w.w4, gvgc)),
        (one, gv, -gvgc),
        (zero, one, -gc_tilde),
    )
    return GeneralizedPlant(entries=rows, gv=gv, gc=gc_tilde, weights=w)


def closed_loop_char_poly(
    gv: TransferFunction,
    gc: TransferFunction,
    kv: TransferFunction,
    kr: TransferFunction,
) -> np.ndarray:
    """Characteristic polynomial of 1 + Gc*Kr + Gv*Gc*Kv over the common
    denominator Dv*Dg*Dr*DG."""
    dv, dg, dr, d_g = kv.den, gc.den, kr.den, gv.den
    nv, ng, nr, n_g = kv.num, gc.num, kr.num, gv.num
    t_open = poly_mul(poly_mul(dv, d_g), poly_mul(dg, dr))
    t_kr = poly_mul(poly_mul(nr, ng), poly_mul(dv, d_g))
    t_kv = poly_mul(poly_mul(nv, n_g), poly_mul(ng, dr))
    return poly_add(poly_add(t_open, t_kr), t_kv)


def _closed_loop_entries(gp: GeneralizedPlant, K: OuterControllers):
    """All eight closed-loop maps (u~ = Kv e1 + Kr e2) over the shared
    characteristic polynomial, with the common-denominator factors already
    divided out analytically."""
    gv, gc = gp.gv, gp.gc
    kv, kr = K.kv, K.kr
    dv, dg, dr, d_g = kv.den, gc.den, kr.den, gv.den
    nv, ng, nr, n_g = kv.num, gc.num, kr.num, gv.num
    chi = closed_loop_char_poly(gv, gc, kv, kr)

    u_from_vref = tf(poly_mul(poly_mul(nv, d_g), poly_mul(dg, dr)), chi)
    u_from_il = tf(
        poly_mul(poly_add(poly_mul(poly_mul(nv, n_g), dr), poly_mul(nr, poly_mul(dv, d_g))), dg),
        chi,
    )
    vdc_from_vref = tf(poly_mul(poly_mul(n_g, ng), poly_mul(nv, dr)), chi)
    vdc_from_il = tf(poly_scale(poly_mul(n_g, poly_mul(dv, poly_mul(dg, dr))), -1.0), chi)
    e1_from_vref = tf(
        poly_mul(poly_mul(dv, d_g), poly_add(poly_mul(dg, dr), poly_mul(ng, nr))), chi
    )
    e1_from_il = tf(poly_mul(n_g, poly_mul(dv, poly_mul(dg, dr))), chi)
    e2_from_vref = tf(poly_scale(poly_mul(poly_mul(ng, nv), poly_mul(d_g, dr)), -1.0), chi)
    e2_from_il = tf(poly_mul(poly_mul(dv, d_g), poly_mul(dg, dr)), chi)
    return {
        "chi": chi,
        "u": (u_from_vref, u_from_il),
        "vdc": (vdc_from_vref, vdc_from_il),
        "e1": (e1_from_vref, e1_from_il),
        "e2": (e2_from_vref, e2_from_il),
    }


def weighted_closed_loop(gp: GeneralizedPlant, K: OuterControllers) -> StateSpace:
    """Close u~ = Kv e1 + Kr e2 and realize the 4x2 map
    [V_ref, i_load] -> [z1..z4]; raises if the loop is internally unstable."""
    maps = _closed_loop_entries(gp, K)
    chi_roots = np.roots(maps["chi"])
    unstable = chi_roots[chi_roots.real >= 0.0]
    if unstable.size:
        raise InternalInstabilityError(
            f"closed loop has {unstable.size} non-Hurwitz pole(s): {unstable}",
            poles=unstable,
        )
    w = gp.weights
    rows = [
        [tf_series(w.w1, maps["e1"][0]), tf_series(w.w1, maps["e1"][1])],
        [tf_series(w.w2, maps["e2"][0]), tf_series(w.w2, maps["e2"][1])],
        [tf_series(w.w3, maps["u"][0]), tf_series(w.w3, maps["u"][1])],
        [tf_series(w.w4, maps["vdc"][0]), tf_series(w.w4, maps["vdc"][1])],
    ]
    entries = [[modal_ss(entry) for entry in row] for row in rows]
    return ss_stack_matrix(entries)


@dataclass(frozen=True)
class SensitivityFamily:
    """Voltage-loop (s1, t1) and current-loop (s2, t2) sensitivities plus
    h = Gc*Kv*S1, the map the power-sharing bound keys on."""

    s1: TransferFunction
    t1: TransferFunction
    s2: TransferFunction
    t2: TransferFunction
    h: TransferFunction


def sensitivity_family(
    gv: TransferFunction, gc_tilde: TransferFunction, K: OuterControllers
) -> SensitivityFamily:
    chi = closed_loop_char_poly(gv, gc_tilde, K.kv, K.kr)
    dv, dg, dr, d_g = K.kv.den, gc_tilde.den, K.kr.den, gv.den
    nv, ng = K.kv.num, gc_tilde.num
    n_g = gv.num
    s1 = tf(poly_mul(poly_mul(dv, d_g), poly_mul(dg, dr)), chi)
    h = tf(poly_mul(poly_mul(ng, nv), poly_mul(d_g, dr)), chi)
    t1 = tf(poly_mul(poly_mul(n_g, ng), poly_mul(nv, dr)), chi)
    loop2 = tf_series(gc_tilde, K.kr)
    s2 = tf_sensitivity(loop2)
    t2 = tf_feedback(loop2)
    return SensitivityFamily(s1=s1, t1=t1, s2=s2, t2=t2, h=h)


@dataclass(frozen=True)
class RatioReport:
    """Constant-multiple diagnostic for the outer pair; purely descriptive."""

    alpha: float
    flatness: float
    dc_ratio_signed: float
    ratios: np.ndarray


def controller_ratio_analysis(K: OuterControllers, grid: FrequencyGrid) -> RatioReport:
    """Median magnitude ratio |Kr/Kv| over the grid and its max relative
    spread; reports the signed DC ratio too since the published Kv leads
    with a negative coefficient."""
    kv_resp = freq_response_many(K.kv, grid.omegas)
    kr_resp = freq_response_many(K.kr, grid.omegas)
    ratios = np.abs(kr_resp) / np.abs(kv_resp)
    alpha = float(np.median(ratios))
    flatness = float(np.max(np.abs(ratios - alpha)) / alpha) if alpha > 0 else 0.0
    kv0 = np.polyval(K.kv.num, 0.0) / np.polyval(K.kv.den, 0.0)
    kr0 = np.polyval(K.kr.num, 0.0) / np.polyval(K.kr.den, 0.0)
    dc = float(kr0 / kv0) if kv0 != 0 else float("inf")
    return RatioReport(alpha=alpha, flatness=flatness, dc_ratio_signed=dc, ratios=ratios)


def droop_filter() -> TransferFunction:
    """First-order lag feeding the voltage error back into the current
    reference when the load current is not measurable."""
    return tf([376.99], [1.0, 314.16])
