"""Parallel-converter network assembly and fixed-step simulation.

The engine holds one inner current controller per converter (all shaping
their 1/(sL_k) into the same target plant), the shared outer pair with the
voltage path scaled by 1/m, and, in decentralized mode, the droop filter
that replaces the load-current measurement.  Controllers run discretized
(Tustin) at the sample period; the averaged plant ODEs are integrated with
classical RK4 sub-steps under a zero-order hold on the control signal.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .converters import (
    BOOST,
    BUCK,
    ConverterParams,
    control_from_duty,
    duty_raw,
)
from .design import (
    InnerDesign,
    OuterControllers,
    bus_voltage_plant,
    design_inner,
    shaped_plant,
)
from .errors import ConfigError, SimulationDiverged
from .lti import (
    TransferFunction,
    discretize_tustin,
    tf_add,
    tf_constant,
    tf_feedback,
    tf_sensitivity,
    tf_series,
    tf_to_ss,
)

CENTRALIZED = "centralized"
DECENTRALIZED = "decentralized"

DEFAULT_TS = 2e-5  # one 50 kHz switching period
DEFAULT_SUBSTEPS = 4

_DIVERGENCE_LIMIT = 1e7


@dataclass(frozen=True)
class ConverterUnit:
    """One converter: electrical parameters plus its inner-loop design."""

    params: ConverterParams
    inner: InnerDesign


@dataclass(frozen=True)
class NetworkConfig:
    converters: Tuple[ConverterUnit, ...]
    bus_c: float
    outer: OuterControllers
    mode: str = CENTRALIZED
    droop: Optional[TransferFunction] = None

    def __post_init__(self):
        object.__setattr__(self, "converters", tuple(self.converters))
        if len(self.converters) < 1:
            raise ConfigError("converters: need at least one converter")
        if not self.bus_c > 0:
            raise ConfigError(f"bus_c: must be positive, got {self.bus_c}")
        if self.mode not in (CENTRALIZED, DECENTRALIZED):
            raise ConfigError(f"mode: must be centralized or decentralized, got {self.mode!r}")
        if self.mode == DECENTRALIZED and self.droop is None:
            raise ConfigError("droop: decentralized mode requires a droop filter")

    @property
    def m(self) -> int:
        return len(self.converters)


@dataclass(frozen=True)
class Segment:
    """Piecewise schedule segment; exactly one of r_load / i_load drives the bus."""

    t_start: float
    v_ref: float
    r_load: Optional[float] = None
    i_load: Optional[float] = None
    ripple_amp: float = 0.0
    ripple_freq: float = 0.0
    gammas: Optional[Tuple[float, ...]] = None
    i_refs: Optional[Tuple[float, ...]] = None

    def __post_init__(self):
        if (self.r_load is None) == (self.i_load is None):
            raise ConfigError(
                f"segment at t={self.t_start}: exactly one of R / i_load must be given"
            )
        if self.r_load is not None and not self.r_load > 0:
            raise ConfigError(f"segment at t={self.t_start}: R must be positive")
        if self.ripple_amp and not self.ripple_freq > 0:
            raise ConfigError(
                f"segment at t={self.t_start}: ripple needs a positive frequency"
            )
        if self.gammas is not None:
            object.__setattr__(self, "gammas", tuple(float(g) for g in self.gammas))
        if self.i_refs is not None:
            object.__setattr__(self, "i_refs", tuple(float(i) for i in self.i_refs))

    def load_current(self, t: float, v: float) -> float:
        if self.r_load is not None:
            base = v / self.r_load
        else:
            base = self.i_load
        if self.ripple_amp:
            base += self.ripple_amp * np.sin(2.0 * np.pi * self.ripple_freq * t)
        return base


@dataclass(frozen=True)
class Schedule:
    segments: Tuple[Segment, ...]

    def __post_init__(self):
        object.__setattr__(self, "segments", tuple(self.segments))
        if not self.segments:
            raise ConfigError("schedule: needs at least one segment")
        if self.segments[0].t_start != 0.0:
            raise ConfigError("schedule: first segment must start at t=0")
        starts = [s.t_start for s in self.segments]
        if any(b <= a for a, b in zip(starts, starts[1:])):
            raise ConfigError("schedule: segment start times must be strictly increasing")


def validate_schedule(schedule: Schedule, cfg: NetworkConfig) -> None:
    """Cross-checks that need both the schedule and the network topology."""
    m = cfg.m
    for i, seg in enumerate(schedule.segments):
        path = f"schedule.segment[{i}]"
        if cfg.mode == CENTRALIZED:
            if seg.gammas is None:
                raise ConfigError(f"{path}.gammas: required in centralized mode")
            if len(seg.gammas) != m:
                raise ConfigError(
                    f"{path}.gammas: expected {m} entries, got {len(seg.gammas)}"
                )
            if any(g < 0.0 or g > 1.0 for g in seg.gammas):
                raise ConfigError(f"{path}.gammas: entries must lie in [0, 1]")
            if abs(sum(seg.gammas) - 1.0) > 1e-9:
                raise ConfigError(
                    f"{path}.gammas: must sum to 1, got {sum(seg.gammas)!r}"
                )
        else:
            if seg.i_refs is None:
                raise ConfigError(f"{path}.i_refs: required in decentralized mode")
            if len(seg.i_refs) != m:
                raise ConfigError(
                    f"{path}.i_refs: expected {m} entries, got {len(seg.i_refs)}"
                )
        for k, unit in enumerate(cfg.converters):
            if unit.params.topology == BUCK and seg.v_ref >= unit.params.Vg:
                raise ConfigError(
                    f"{path}.v_ref: buck converter [{k}] steps down, "
                    f"need v_ref < Vg={unit.params.Vg}"
                )


@dataclass(frozen=True)
class SimEngine:
    """Network ready to simulate: inner controllers verified and built."""

    cfg: NetworkConfig
    inner_controllers: Tuple[TransferFunction, ...]
    shaped_plants: Tuple[TransferFunction, ...]

    @property
    def m(self) -> int:
        return self.cfg.m


def build_network(cfg: NetworkConfig) -> SimEngine:
    """Design (and verify) every inner loop, returning a simulation engine."""
    kcs, gcs = [], []
    for k, unit in enumerate(cfg.converters):
        try:
            kcs.append(design_inner(unit.params.L, unit.inner))
        except ValueError as exc:
            raise ConfigError(f"converters[{k}]: {exc}") from exc
        gcs.append(shaped_plant(unit.inner))
    return SimEngine(cfg=cfg, inner_controllers=tuple(kcs), shaped_plants=tuple(gcs))


@dataclass
class SimResult:
    """Uniformly sampled log of one simulation run."""

    t: np.ndarray
    vdc: np.ndarray
    iload: np.ndarray
    il: np.ndarray       # (N, m)
    duty: np.ndarray     # (N, m)
    utilde: np.ndarray   # (N, m), as applied to the plant
    e1: np.ndarray
    e2: np.ndarray       # (N, m)
    ts: float
    mode: str
    saturation_events: List[Tuple[int, int]] = field(default_factory=list)

    @property
    def m(self) -> int:
        return self.il.shape[1]


class _Bank:
    """m parallel SISO discrete controllers stepped as one stacked system."""

    def __init__(self, systems):
        self.A = np.stack([s.A for s in systems])
        self.B = np.stack([s.B for s in systems])
        self.C = np.stack([s.C for s in systems])
        self.D = np.array([s.D[0, 0] for s in systems])
        self.x = np.zeros((len(systems), self.A.shape[1], 1))

    def step(self, u: np.ndarray) -> np.ndarray:
        y = (self.C @ self.x)[:, 0, 0] + self.D * u
        self.x = self.A @ self.x + self.B * u[:, None, None]
        return y


def _scaled(g: TransferFunction, k: float) -> TransferFunction:
    return TransferFunction(g.num * k, g.den)


def simulate(
    engine: SimEngine,
    schedule: Schedule,
    duration: float,
    ts: float = DEFAULT_TS,
    substeps: int = DEFAULT_SUBSTEPS,
    init: str = "equilibrium",
) -> SimResult:
    """Run the sampled control loop against the RK4-integrated averaged plant.

    Per sample: measure, form the outer errors, step the discrete outer and
    inner controllers, reconstruct (and clamp) duty cycles, then integrate
    the inductor/bus ODEs over `substeps` RK4 steps with the applied control
    held constant.
    """
    if ts <= 0:
        raise ConfigError(f"ts: must be positive, got {ts}")
    if substeps < 1:
        raise ConfigError(f"substeps: must be >= 1, got {substeps}")
    if duration < ts:
        raise ConfigError(f"duration: must be at least one sample ({ts}), got {duration}")
    if init not in ("equilibrium", "cold"):
        raise ConfigError(f"init: must be 'equilibrium' or 'cold', got {init!r}")
    cfg = engine.cfg
    validate_schedule(schedule, cfg)
    m = cfg.m
    decentralized = cfg.mode == DECENTRALIZED

    kv_per = _scaled(cfg.outer.kv, 1.0 / m)
    kv_bank = _Bank([discretize_tustin(tf_to_ss(kv_per), ts)] * m)
    kr_bank = _Bank([discretize_tustin(tf_to_ss(cfg.outer.kr), ts)] * m)
    kc_bank = _Bank([discretize_tustin(tf_to_ss(kc), ts) for kc in engine.inner_controllers])
    droop_bank = (
        _Bank([discretize_tustin(tf_to_ss(cfg.droop), ts)]) if decentralized else None
    )

    params = [u.params for u in cfg.converters]
    L_vec = np.array([p.L for p in params])
    Vg_vec = np.array([p.Vg for p in params])
    w_vec = np.array([p.Dprime if p.topology == BOOST else 1.0 for p in params])
    is_boost = np.array([p.topology == BOOST for p in params])
    inv_c = 1.0 / cfg.bus_c

    segments = schedule.segments
    seg_idx = 0
    seg = segments[0]

    # initial plant state
    if init == "equilibrium":
        v = seg.v_ref
        i0 = seg.load_current(0.0, v)
        if decentralized:
            il = np.array(seg.i_refs, dtype=float)
        else:
            il = np.array(seg.gammas, dtype=float) * i0 / w_vec
    else:
        v = 0.0
        il = np.zeros(m)

    n_samples = int(round(duration / ts))
    t_log = np.empty(n_samples)
    v_log = np.empty(n_samples)
    iload_log = np.empty(n_samples)
    il_log = np.empty((n_samples, m))
    duty_log = np.empty((n_samples, m))
    ut_log = np.empty((n_samples, m))
    e1_log = np.empty(n_samples)
    e2_log = np.empty((n_samples, m))
    sat_events: List[Tuple[int, int]] = []

    h = ts / substeps
    ones_m = np.ones(m)
    gammas = np.array(seg.gammas) if seg.gammas is not None else None
    i_refs = np.array(seg.i_refs) if seg.i_refs is not None else None

    for n in range(n_samples):
        t = n * ts
        while seg_idx + 1 < len(segments) and t >= segments[seg_idx + 1].t_start - 1e-12:
            seg_idx += 1
            seg = segments[seg_idx]
            gammas = np.array(seg.gammas) if seg.gammas is not None else None
            i_refs = np.array(seg.i_refs) if seg.i_refs is not None else None

        iload_meas = seg.load_current(t, v)
        e1 = seg.v_ref - v
        yv = kv_bank.step(e1 * ones_m)
        if decentralized:
            comp = droop_bank.step(np.array([e1]))[0]
            e2 = i_refs + comp - il
        else:
            e2 = gammas * iload_meas - il
        yr = kr_bank.step(e2)
        u_outer = yv + yr
        ut = kc_bank.step(u_outer - il)

        # duty reconstruction; clamping saturates the applied control
        ut_app = ut.copy()
        duty = np.empty(m)
        for k in range(m):
            d_raw = duty_raw(params[k], ut[k], v)
            if 0.0 <= d_raw <= 1.0:
                duty[k] = d_raw
            else:
                duty[k] = min(max(d_raw, 0.0), 1.0)
                ut_app[k] = control_from_duty(params[k], duty[k], v)
                sat_events.append((n, k))

        t_log[n] = t
        v_log[n] = v
        iload_log[n] = iload_meas
        il_log[n] = il
        duty_log[n] = duty
        ut_log[n] = ut_app
        e1_log[n] = e1
        e2_log[n] = e2

        # RK4 over the hold interval; control constant, load may vary in time
        dil = ut_app / L_vec
        tt = t
        for _ in range(substeps):
            k1v = (w_vec @ il - seg.load_current(tt, v)) * inv_c
            il_2 = il + (0.5 * h) * dil
            v_2 = v + (0.5 * h) * k1v
            k2v = (w_vec @ il_2 - seg.load_current(tt + 0.5 * h, v_2)) * inv_c
            v_3 = v + (0.5 * h) * k2v
            k3v = (w_vec @ il_2 - seg.load_current(tt + 0.5 * h, v_3)) * inv_c
            il_4 = il + h * dil
            v_4 = v + h * k3v
            k4v = (w_vec @ il_4 - seg.load_current(tt + h, v_4)) * inv_c
            v = v + (h / 6.0) * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)
            il = il_4
            tt += h

        if not np.isfinite(v) or abs(v) > _DIVERGENCE_LIMIT or np.any(
            ~np.isfinite(il)
        ) or np.any(np.abs(il) > _DIVERGENCE_LIMIT):
            raise SimulationDiverged(
                f"state diverged at t={t + ts:.6g}s (sample {n + 1})", last_valid_index=n
            )

    return SimResult(
        t=t_log,
        vdc=v_log,
        iload=iload_log,
        il=il_log,
        duty=duty_log,
        utilde=ut_log,
        e1=e1_log,
        e2=e2_log,
        ts=ts,
        mode=cfg.mode,
        saturation_events=sat_events,
    )


@dataclass(frozen=True)
class NetworkMaps:
    """Closed-loop SISO maps of the whole network onto the DC-link voltage."""

    from_vref: TransferFunction
    from_iload: TransferFunction


def transfer_functions_of_network(
    cfg: NetworkConfig, kv_scales: Optional[Sequence[float]] = None
) -> NetworkMaps:
    """Block-algebra closure of the parallel network into V_ref -> Vdc and
    i_load -> Vdc, assuming the current references sum to the load current
    (taken as an even 1/m split).

    `kv_scales` multiplies individual voltage-controller branches; the
    default of all ones is the theorem's symmetric case.
    """
    m = cfg.m
    scales = tuple(kv_scales) if kv_scales is not None else (1.0,) * m
    if len(scales) != m:
        raise ConfigError(f"kv_scales: expected {m} entries, got {len(scales)}")
    gv = bus_voltage_plant(cfg.bus_c)
    kv, kr = cfg.outer.kv, cfg.outer.kr
    bv = None
    br = None
    for k, unit in enumerate(cfg.converters):
        gc_k = shaped_plant(unit.inner)
        s2_k = tf_sensitivity(tf_series(gc_k, kr))
        branch_v = tf_series(
            tf_series(gv, gc_k), tf_series(s2_k, _scaled(kv, scales[k] / m))
        )
        branch_r = tf_series(tf_series(gc_k, s2_k), _scaled(kr, 1.0 / m))
        bv = branch_v if bv is None else tf_add(bv, branch_v)
        br = branch_r if br is None else tf_add(br, branch_r)
    from_vref = tf_feedback(bv)
    from_iload = tf_series(
        tf_series(gv, tf_add(br, tf_constant(-1.0))), tf_sensitivity(bv)
    )
    return NetworkMaps(from_vref=from_vref, from_iload=from_iload)
