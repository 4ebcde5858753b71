"""Cycle-averaged buck/boost converter models.

Both topologies reduce to L di/dt = u_tilde after the control-signal
substitution (buck: u_tilde = -V + d*Vg, boost: u_tilde = Vg - d'*V), so
the inductor dynamics are shared; they differ in the effective current
delivered to the DC-link (iL for buck, D'*iL for boost, linearized) and
in the duty-cycle reconstruction.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional, Sequence, Tuple

import numpy as np

BUCK = "buck"
BOOST = "boost"


@dataclass(frozen=True)
class ConverterParams:
    topology: str
    L: float
    Vg: float
    Dprime: Optional[float] = None  # boost only: Vg / V_ref

    def __post_init__(self):
        if self.topology not in (BUCK, BOOST):
            raise ValueError(f"topology must be '{BUCK}' or '{BOOST}', got {self.topology!r}")
        if not self.L > 0:
            raise ValueError(f"L must be positive, got {self.L}")
        if not self.Vg > 0:
            raise ValueError(f"Vg must be positive, got {self.Vg}")
        if self.topology == BOOST:
            if self.Dprime is None or not (0.0 < self.Dprime < 1.0):
                raise ValueError(f"boost requires 0 < Dprime < 1 (step-up), got {self.Dprime}")
        elif self.Dprime is not None:
            raise ValueError("Dprime applies to boost converters only")


def buck_params(L: float, Vg: float) -> ConverterParams:
    return ConverterParams(BUCK, L, Vg)


def boost_params(L: float, Vg: float, v_ref: float) -> ConverterParams:
    if not v_ref > Vg:
        raise ValueError(f"boost steps up: need V_ref > Vg, got {v_ref} <= {Vg}")
    return ConverterParams(BOOST, L, Vg, Dprime=Vg / v_ref)


@dataclass(frozen=True)
class ConverterState:
    iL: float  # inductor current, A


@dataclass(frozen=True)
class BusState:
    V: float  # DC-link voltage, V
    C: float  # link capacitance, F

    def __post_init__(self):
        if not self.C > 0:
            raise ValueError(f"bus capacitance must be positive, got {self.C}")


def inductor_derivative(params: ConverterParams, u_tilde: float) -> float:
    """di_L/dt = u_tilde / L (identical for both topologies)."""
    return u_tilde / params.L


def effective_bus_current(params: ConverterParams, iL: float) -> float:
    """Current a converter injects into the DC-link (D'*iL for boost)."""
    if params.topology == BOOST:
        return params.Dprime * iL
    return iL


def bus_derivative(
    bus: BusState,
    branches: Sequence[Tuple[ConverterParams, float]],
    i_load: float,
) -> float:
    """dV/dt = (sum of effective branch currents - i_load) / C."""
    total = sum(effective_bus_current(p, iL) for p, iL in branches)
    return (total - i_load) / bus.C


def duty_from_control(params: ConverterParams, u_tilde: float, V: float) -> float:
    """Reconstruct the PWM duty cycle from the control signal, clamped to [0, 1].

    Saturation is detected by the caller from the unclamped value; see
    duty_raw.
    """
    return float(np.clip(duty_raw(params, u_tilde, V), 0.0, 1.0))


def duty_raw(params: ConverterParams, u_tilde: float, V: float) -> float:
    """Unclamped duty cycle; boost requires a positive link voltage."""
    if params.topology == BUCK:
        return (u_tilde + V) / params.Vg
    if V <= 0.0:
        raise ValueError(f"boost duty reconstruction needs V > 0, got {V}")
    d_prime = (params.Vg - u_tilde) / V
    return 1.0 - d_prime


def control_from_duty(params: ConverterParams, duty: float, V: float) -> float:
    """Inverse of duty_from_control; gives the control the clamped duty realizes."""
    if params.topology == BUCK:
        return -V + duty * params.Vg
    return params.Vg - (1.0 - duty) * V


def perturb_params(
    params: ConverterParams,
    fraction: float,
    seed: Optional[int] = None,
    rng: Optional[np.random.Generator] = None,
) -> ConverterParams:
    """Scale L by a uniform draw in [1-fraction, 1+fraction].

    Deterministic for a fixed seed; pass a shared rng to tie several draws
    (e.g. L here and the bus capacitance at the call site) to one stream.
    """
    if not 0.0 <= fraction < 1.0:
        raise ValueError(f"fraction must be in [0, 1), got {fraction}")
    if rng is None:
        rng = np.random.default_rng(seed)
    scale = perturb_scale(fraction, rng)
    return replace(params, L=params.L * scale)


def perturb_scale(fraction: float, rng: np.random.Generator) -> float:
    """One multiplicative uncertainty draw, uniform on [1-fraction, 1+fraction]."""
    return float(rng.uniform(1.0 - fraction, 1.0 + fraction))
