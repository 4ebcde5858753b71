import hypothesis
import numpy as np
import pytest

from dclink.lti import StateSpace

hypothesis.settings.register_profile(
    "default", max_examples=40, deadline=None, derandomize=True
)
hypothesis.settings.load_profile("default")


def random_stable_ss(rng, n, n_in=1, n_out=1, damp_min=0.08, mag_range=(0.5, 50.0)):
    """Random stable system with all modes damped at least `damp_min`.

    Built modally so the pole locations are exact; keeps grid oracles able
    to see the peaks.
    """
    blocks = []
    left = n
    while left > 0:
        mag = np.exp(rng.uniform(np.log(mag_range[0]), np.log(mag_range[1])))
        if left >= 2 and rng.uniform() < 0.6:
            zeta = rng.uniform(damp_min, 0.9)
            a = -zeta * mag
            b = mag * np.sqrt(1 - zeta**2)
            blocks.append(np.array([[a, -b], [b, a]]))
            left -= 2
        else:
            blocks.append(np.array([[-mag]]))
            left -= 1
    A = np.zeros((n, n))
    at = 0
    for blk in blocks:
        k = blk.shape[0]
        A[at:at + k, at:at + k] = blk
        at += k
    B = rng.standard_normal((n, n_in))
    C = rng.standard_normal((n_out, n))
    D = 0.1 * rng.standard_normal((n_out, n_in))
    return StateSpace(A, B, C, D)


def dense_oracle_grid(sys, points=1200):
    """Log grid covering the pole span with clusters at each resonance."""
    lam = np.linalg.eigvals(sys.A) if sys.A.size else np.array([1.0 + 0j])
    mags = np.abs(lam)
    lo = max(mags.min() / 1e3, 1e-12)
    hi = mags.max() * 1e3
    grid = np.logspace(np.log10(lo), np.log10(hi), points)
    spread = np.geomspace(0.97, 1.03, 61)
    clusters = [abs(l.imag) * spread for l in lam if abs(l.imag) > 0]
    clusters.append(mags * 1.0)
    omegas = np.unique(np.concatenate([grid] + clusters))
    return omegas[omegas > 0]


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20260810)
