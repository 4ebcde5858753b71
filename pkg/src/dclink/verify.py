"""Aggregated invariant suites behind the `verify` subcommand.

Each check returns a pass/fail with a one-line numeric detail; `quick`
uses small randomized draws, `full` widens them (50 inner designs, 20
random systems per numeric check).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from .analysis import SharingSignals, equivalence_residual, sharing_bound_check
from .converters import buck_params
from .design import (
    InnerDesign,
    bus_voltage_plant,
    canonical_inner_design,
    canonical_outer,
    design_inner,
    sensitivity_family,
    shaped_plant,
)
from .lti import (
    RIPPLE_OMEGA,
    StateSpace,
    balanced_truncation,
    default_grid,
    hinf_norm,
    hinf_norm_grid_oracle,
    lyap_solve,
    ss_response,
    tf,
    tf_feedback,
    tf_series,
)
from .netsim import ConverterUnit, NetworkConfig, transfer_functions_of_network

FAULTS = ("kv1",)


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def _random_stable_ss(rng, n, n_in=1, n_out=1):
    A = np.zeros((n, n))
    left, at = n, 0
    while left > 0:
        mag = np.exp(rng.uniform(np.log(0.5), np.log(50.0)))
        if left >= 2 and rng.uniform() < 0.6:
            zeta = rng.uniform(0.1, 0.9)
            a, b = -zeta * mag, mag * np.sqrt(1 - zeta**2)
            A[at:at + 2, at:at + 2] = [[a, -b], [b, a]]
            at += 2
            left -= 2
        else:
            A[at, at] = -mag
            at += 1
            left -= 1
    B = rng.standard_normal((n, n_in))
    C = rng.standard_normal((n_out, n))
    D = 0.1 * rng.standard_normal((n_out, n_in))
    return StateSpace(A, B, C, D)


def _oracle_grid(sys):
    lam = np.linalg.eigvals(sys.A)
    mags = np.abs(lam)
    grid = np.logspace(np.log10(mags.min() / 1e3), np.log10(mags.max() * 1e3), 900)
    spread = np.geomspace(0.97, 1.03, 41)
    clusters = [abs(l.imag) * spread for l in lam if abs(l.imag) > 0]
    omegas = np.unique(np.concatenate([grid] + clusters))
    return omegas[omegas > 0]


def check_inner_identity(draws: int, seed: int = 0) -> CheckResult:
    """Closing Kc around 1/(sL) must reproduce the target shaped plant."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    designs = [(1.2e-3, canonical_inner_design())]
    for _ in range(draws):
        z1 = rng.uniform(0.1, 2.0)
        designs.append((
            rng.uniform(1e-4, 1e-2),
            InnerDesign(
                zeta1=z1,
                zeta2=z1 + rng.uniform(0.05, 3.0),
                omega_tilde=RIPPLE_OMEGA * rng.uniform(1.05, 10.0),
            ),
        ))
    for L, d in designs:
        kc = design_inner(L, d)
        closed = tf_feedback(tf_series(kc, tf([1.0], [L, 0.0])))
        target = shaped_plant(d)
        scale = max(np.abs(target.den).max(), np.abs(target.num).max())
        num_err = np.max(np.abs(np.polysub(closed.num, target.num)))
        den_err = np.max(np.abs(np.polysub(closed.den, target.den)))
        worst = max(worst, max(num_err, den_err) / scale)
    return CheckResult(
        "inner feedback identity",
        worst < 1e-9,
        f"worst normalized coefficient residual {worst:.3e} over {len(designs)} designs (< 1e-9)",
    )


def _network_cfg(m: int) -> NetworkConfig:
    inner = canonical_inner_design()
    Ls = (1.2e-3, 1.6e-3, 1.9e-3, 1.4e-3, 1.1e-3)
    return NetworkConfig(
        converters=tuple(
            ConverterUnit(buck_params(Ls[k % len(Ls)], 480.0), inner) for k in range(m)
        ),
        bus_c=500e-6,
        outer=canonical_outer(),
    )


def check_equivalence(inject_fault: Optional[str] = None) -> CheckResult:
    """Multi-converter closure must match the single-converter loop."""
    grid = default_grid()
    single = transfer_functions_of_network(_network_cfg(1))
    worst = 0.0
    for m in (2, 3, 5):
        scales = None
        if inject_fault == "kv1":
            scales = (1.01,) + (1.0,) * (m - 1)
        multi = transfer_functions_of_network(_network_cfg(m), kv_scales=scales)
        worst = max(worst, equivalence_residual(single, multi, grid))
    label = " (fault injected)" if inject_fault else ""
    return CheckResult(
        "network equivalence",
        worst < 1e-8,
        f"max residual over m in {{2,3,5}}: {worst:.3e} (< 1e-8){label}",
    )


def check_sharing_bound() -> CheckResult:
    fam = sensitivity_family(
        bus_voltage_plant(500e-6), shaped_plant(canonical_inner_design()), canonical_outer()
    )
    grid = default_grid()
    ok = True
    details = []
    for name, sum_refs in (("matched", 20.0), ("mismatched", 21.0)):
        rep = sharing_bound_check(
            fam,
            SharingSignals(v_ref=240.0, i_load=20.0, i_k_ref=20.0 / 3, sum_i_refs=sum_refs),
            m=3,
            grid=grid,
        )
        ok = ok and rep.premise_ok.any() and rep.holds_where_premises_hold
        margin = np.min((rep.rhs - rep.lhs)[rep.premise_ok])
        details.append(f"{name}: min margin {margin:.3e}, premises at {rep.premise_ok.sum()} freqs")
    return CheckResult("power-sharing bound", ok, "; ".join(details))


def check_hinf_oracle(n_systems: int, seed: int = 1) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_systems):
        sys = _random_stable_ss(rng, int(rng.integers(2, 9)))
        nrm = hinf_norm(sys, tol=1e-7)
        oracle = max(
            hinf_norm_grid_oracle(sys, _oracle_grid(sys)),
            float(np.linalg.svd(ss_response(sys, 0.0), compute_uv=False)[0]),
        )
        worst = max(worst, abs(nrm - oracle) / oracle)
    return CheckResult(
        "H-infinity norm vs grid oracle",
        worst < 1e-3,
        f"worst relative disagreement {worst:.3e} over {n_systems} systems (< 1e-3)",
    )


def check_lyapunov(n_systems: int, seed: int = 2) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_systems):
        n = int(rng.integers(2, 9))
        sys = _random_stable_ss(rng, n)
        Q = rng.standard_normal((n, n))
        Q = Q @ Q.T
        P = lyap_solve(sys.A, Q)
        res = np.linalg.norm(sys.A @ P + P @ sys.A.T + Q) / max(1.0, np.linalg.norm(Q))
        worst = max(worst, res)
    return CheckResult(
        "Lyapunov residuals",
        worst < 1e-10,
        f"worst scaled residual {worst:.3e} over {n_systems} solves (< 1e-10)",
    )


def check_truncation(n_systems: int, seed: int = 3) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst_excess = -np.inf
    for _ in range(n_systems):
        n = int(rng.integers(4, 9))
        sys = _random_stable_ss(rng, n)
        order = int(rng.integers(1, n))
        red, hank = balanced_truncation(sys, order)
        diff = StateSpace(
            np.block([
                [sys.A, np.zeros((sys.n, red.n))],
                [np.zeros((red.n, sys.n)), red.A],
            ]),
            np.vstack([sys.B, red.B]),
            np.hstack([sys.C, -red.C]),
            sys.D - red.D,
        )
        err = hinf_norm(diff, tol=1e-10)
        bound = 2.0 * float(np.sum(hank[order:])) + 1e-8
        worst_excess = max(worst_excess, err - bound)
    return CheckResult(
        "balanced truncation bound",
        worst_excess <= 0.0,
        f"worst (error - bound) {worst_excess:.3e} over {n_systems} reductions (<= 0)",
    )


def run_checks(level: str = "quick", inject_fault: Optional[str] = None) -> List[CheckResult]:
    if level not in ("quick", "full"):
        raise ValueError(f"level must be quick or full, got {level!r}")
    if inject_fault is not None and inject_fault not in FAULTS:
        raise ValueError(f"unknown fault {inject_fault!r}; known: {FAULTS}")
    full = level == "full"
    draws = 50 if full else 10
    systems = 20 if full else 5
    return [
        check_inner_identity(draws),
        check_equivalence(inject_fault),
        check_sharing_bound(),
        check_hinf_oracle(systems),
        check_lyapunov(systems),
        check_truncation(systems),
    ]
