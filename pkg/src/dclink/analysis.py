"""Quantitative verification: equivalence residuals, the power-sharing
bound, steady-state extraction, ripple and tracking metrics."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Tuple, Union

import numpy as np

from .design import SensitivityFamily
from .lti import FrequencyGrid, freq_response_many
from .netsim import NetworkMaps, SimResult

__all__ = [
    "SteadyStateReport",
    "SharingSignals",
    "SharingBoundReport",
    "TrackingMetrics",
    "equivalence_residual",
    "sharing_bound_check",
    "steady_state",
    "ripple_amplitude",
    "tracking_metrics",
    "settling_window",
    "NOT_SETTLED",
]

NOT_SETTLED = float("inf")


# ---------------------------------------------------------------------------
# frequency-domain equivalence

def equivalence_residual(
    single: NetworkMaps, multi: NetworkMaps, grid: FrequencyGrid
) -> float:
    """Max relative frequency-response deviation over both bus maps."""
    worst = 0.0
    for a, b in (
        (single.from_vref, multi.from_vref),
        (single.from_iload, multi.from_iload),
    ):
        ra = freq_response_many(a, grid.omegas)
        rb = freq_response_many(b, grid.omegas)
        floor = 1e-12 * np.max(np.abs(ra))
        worst = max(worst, float(np.max(np.abs(ra - rb) / np.maximum(np.abs(ra), floor))))
    return worst


# ---------------------------------------------------------------------------
# power-sharing bound (frequency domain)

@dataclass(frozen=True)
class SharingSignals:
    """Per-frequency (or constant) signal amplitudes entering the bound."""

    v_ref: Union[float, np.ndarray]
    i_load: Union[float, np.ndarray]
    i_k_ref: Union[float, np.ndarray]
    sum_i_refs: Union[float, np.ndarray]


@dataclass
class SharingBoundReport:
    omegas: np.ndarray
    eps_h: np.ndarray
    eps_s2: np.ndarray
    delta: np.ndarray
    lhs: np.ndarray
    rhs: np.ndarray
    premise_ok: np.ndarray  # |T1|, |T2| < 1 + eps at that frequency
    satisfied: np.ndarray   # strict lhs < rhs

    @property
    def holds_where_premises_hold(self) -> bool:
        return bool(np.all(self.satisfied[self.premise_ok]))


def sharing_bound_check(
    family: SensitivityFamily,
    signals: SharingSignals,
    m: int,
    grid: FrequencyGrid,
) -> SharingBoundReport:
    """Evaluate the per-converter current-mismatch identity against its bound.

    The mismatch is assembled exactly from the closed-loop maps with the
    signal amplitudes taken as zero-phase phasors; the bound side uses the
    per-frequency epsilon = max(|H|, |S2|).  Frequencies where the
    |T| < 1 + eps premise fails are flagged, not asserted.
    """
    w = grid.omegas
    h = freq_response_many(family.h, w)
    s2 = freq_response_many(family.s2, w)
    t1 = freq_response_many(family.t1, w)
    t2 = freq_response_many(family.t2, w)
    vref = np.broadcast_to(np.asarray(signals.v_ref, dtype=float), w.shape)
    iload = np.broadcast_to(np.asarray(signals.i_load, dtype=float), w.shape)
    ikref = np.broadcast_to(np.asarray(signals.i_k_ref, dtype=float), w.shape)
    sumref = np.broadcast_to(np.asarray(signals.sum_i_refs, dtype=float), w.shape)
    mismatch = sumref - iload
    delta = np.abs(mismatch)

    lhs = np.abs(
        h * vref / m
        - t1 * t2 * mismatch / m
        + t1 * s2 * iload / m
        - s2 * ikref
    )
    eps = np.maximum(np.abs(h), np.abs(s2))
    rhs = (
        eps / m * vref
        + eps * (1.0 + eps) / m * iload
        + (1.0 + eps) ** 2 * delta / m
        + eps * ikref
    )
    premise_ok = (np.abs(t1) < 1.0 + eps) & (np.abs(t2) < 1.0 + eps)
    return SharingBoundReport(
        omegas=w,
        eps_h=np.abs(h),
        eps_s2=np.abs(s2),
        delta=delta,
        lhs=lhs,
        rhs=rhs,
        premise_ok=premise_ok,
        satisfied=lhs < rhs,
    )


# ---------------------------------------------------------------------------
# time-domain metrics

@dataclass(frozen=True)
class SteadyStateReport:
    window: Tuple[float, float]
    vdc_mean: float
    vdc_p2p: float
    iload_mean: float
    iload_p2p: float
    il_mean: np.ndarray
    il_p2p: np.ndarray
    ratios: np.ndarray  # inductor-current shares, closed to sum exactly 1


def settling_window(t_start: float, t_end: float, fraction: float = 0.2):
    """Final `fraction` of a schedule segment, the default extraction window."""
    return (t_end - fraction * (t_end - t_start), t_end)


def steady_state(sim: SimResult, window: Tuple[float, float]) -> SteadyStateReport:
    lo, hi = window
    if lo < sim.t[0] - 1e-12 or hi > sim.t[-1] + sim.ts + 1e-12:
        raise ValueError(f"window {window} outside simulated range [{sim.t[0]}, {sim.t[-1]}]")
    mask = (sim.t >= lo - 1e-12) & (sim.t <= hi + 1e-12)
    if not np.any(mask):
        raise ValueError(f"window {window} contains no samples")
    il = sim.il[mask]
    il_mean = il.mean(axis=0)
    total = il_mean.sum()
    ratios = il_mean / total
    ratios[-1] = 1.0 - ratios[:-1].sum()  # close the sum exactly
    vdc = sim.vdc[mask]
    iload = sim.iload[mask]
    return SteadyStateReport(
        window=(lo, hi),
        vdc_mean=float(vdc.mean()),
        vdc_p2p=float(vdc.max() - vdc.min()),
        iload_mean=float(iload.mean()),
        iload_p2p=float(iload.max() - iload.min()),
        il_mean=il_mean,
        il_p2p=il.max(axis=0) - il.min(axis=0),
        ratios=ratios,
    )


def ripple_amplitude(series: np.ndarray, ts: float, freq: float) -> float:
    """Amplitude of the sinusoidal component at `freq`.

    Accumulates the single-frequency sine/cosine correlations over the
    largest whole number of periods in the window and solves the 3x3
    normal equations (sin, cos, DC), so a pure tone is recovered exactly
    even when the period is not an integer number of samples and any DC
    offset is rejected.
    """
    x = np.asarray(series, dtype=float)
    if freq <= 0 or ts <= 0:
        raise ValueError("freq and ts must be positive")
    n = x.size
    periods = int(np.floor((n - 1) * ts * freq))
    if periods < 1:
        raise ValueError(
            f"window of {n} samples spans less than one period of {freq} Hz"
        )
    keep = min(n, int(round(periods / (freq * ts))) + 1)
    x = x[-keep:]
    t = np.arange(keep) * ts
    s = np.sin(2.0 * np.pi * freq * t)
    c = np.cos(2.0 * np.pi * freq * t)
    one = np.ones(keep)
    # Goertzel-style single-frequency accumulations
    basis = np.stack([s, c, one])
    gram = basis @ basis.T
    rhs = basis @ x
    a, b, _dc = np.linalg.solve(gram, rhs)
    return float(np.hypot(a, b))


@dataclass(frozen=True)
class TrackingMetrics:
    overshoot_pct: float
    settling_time_2pct: float  # NOT_SETTLED when never reached
    ss_error_pct: float


def tracking_metrics(sim: SimResult, v_ref_final: float) -> TrackingMetrics:
    """Standard step metrics over the DC-link voltage series."""
    v = sim.vdc
    ref = float(v_ref_final)
    overshoot = max(0.0, (float(v.max()) - ref) / abs(ref) * 100.0)
    band = 0.02 * abs(ref)
    outside = np.abs(v - ref) > band
    if outside[-1]:
        settling = NOT_SETTLED
    elif not np.any(outside):
        settling = 0.0
    else:
        settling = float(sim.t[int(np.nonzero(outside)[0][-1])] + sim.ts)
    tail = v[int(np.floor(0.9 * v.size)):]
    ss_error = abs(float(tail.mean()) - ref) / abs(ref) * 100.0
    return TrackingMetrics(
        overshoot_pct=overshoot,
        settling_time_2pct=settling,
        ss_error_pct=ss_error,
    )
