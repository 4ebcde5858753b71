"""SISO transfer-function and state-space numerics.

Polynomials are 1-D float arrays of coefficients in descending degree.
The zero polynomial is canonically ``[0.0]``; any other polynomial has a
nonzero leading coefficient.  Transfer functions are stored with a monic
denominator.  Products never cancel common factors; cancellation happens
only through :func:`minreal`.

Contents: rational algebra (series, add, unity feedback/sensitivity),
frequency response, poles/stability, realizations (companion and modal),
Tustin discretization, Lyapunov solve, H-infinity norm by Hamiltonian
bisection with a frequency-grid oracle, and balanced truncation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import (
    ConditioningError,
    PoleOnAxisError,
    SingularLoopError,
    UnstableSystemError,
)

__all__ = [
    "TransferFunction",
    "StateSpace",
    "DiscreteStateSpace",
    "FrequencyGrid",
    "as_poly",
    "poly_add",
    "poly_mul",
    "poly_scale",
    "tf",
    "tf_constant",
    "tf_series",
    "tf_add",
    "tf_feedback",
    "tf_sensitivity",
    "freq_response",
    "freq_response_many",
    "poles",
    "is_stable",
    "minreal",
    "tf_to_ss",
    "ss_to_tf",
    "modal_ss",
    "ss_stack_matrix",
    "ss_response",
    "discretize_tustin",
    "lyap_solve",
    "hinf_norm",
    "hinf_norm_grid_oracle",
    "balanced_truncation",
    "default_grid",
]


# ---------------------------------------------------------------------------
# polynomial helpers (descending coefficients)

def as_poly(coeffs) -> np.ndarray:
    """Canonicalize coefficients: 1-D float array, exact leading zeros trimmed."""
    a = np.atleast_1d(np.asarray(coeffs, dtype=float)).ravel()
    if a.size == 0 or not np.any(a != 0.0):
        return np.zeros(1)
    first = int(np.argmax(a != 0.0))
    return a[first:].copy()


def poly_degree(a) -> int:
    a = np.asarray(a)
    return a.size - 1


def poly_mul(a, b) -> np.ndarray:
    return as_poly(np.convolve(np.asarray(a, dtype=float), np.asarray(b, dtype=float)))


def poly_add(a, b) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    n = max(a.size, b.size)
    out = np.zeros(n)
    out[n - a.size:] = a
    out[n - b.size:] += b
    return as_poly(out)


def poly_scale(a, k) -> np.ndarray:
    return as_poly(np.asarray(a, dtype=float) * float(k))


def poly_eval(a, s):
    return np.polyval(np.asarray(a, dtype=float), s)


def is_zero_poly(a) -> bool:
    a = np.asarray(a)
    return a.size == 1 and a[0] == 0.0


# ---------------------------------------------------------------------------
# transfer functions

@dataclass(frozen=True, eq=False)
class TransferFunction:
    """Rational function num(s)/den(s); den is stored monic."""

    num: np.ndarray
    den: np.ndarray

    def __post_init__(self):
        num = as_poly(self.num)
        den = as_poly(self.den)
        if is_zero_poly(den):
            raise ZeroDivisionError("transfer function denominator is the zero polynomial")
        lead = den[0]
        if lead != 1.0:
            # single well-defined rescale; skipped when already monic so that
            # shared-denominator constructions stay bit-identical
            den = den / lead
            den[0] = 1.0
            num = num / lead
        object.__setattr__(self, "num", num)
        object.__setattr__(self, "den", den)

    @property
    def degree_num(self) -> int:
        return poly_degree(self.num)

    @property
    def degree_den(self) -> int:
        return poly_degree(self.den)

    @property
    def is_proper(self) -> bool:
        return self.degree_num <= self.degree_den

    def __mul__(self, other):
        if isinstance(other, TransferFunction):
            return tf_series(self, other)
        return TransferFunction(poly_scale(self.num, other), self.den)

    __rmul__ = __mul__

    def __add__(self, other):
        if not isinstance(other, TransferFunction):
            other = tf_constant(other)
        return tf_add(self, other)

    __radd__ = __add__

    def __neg__(self):
        return TransferFunction(-self.num, self.den)

    def __sub__(self, other):
        if not isinstance(other, TransferFunction):
            other = tf_constant(other)
        return tf_add(self, -other)

    def __repr__(self):
        return f"TransferFunction(num={self.num.tolist()}, den={self.den.tolist()})"


def tf(num, den) -> TransferFunction:
    return TransferFunction(np.asarray(num, dtype=float), np.asarray(den, dtype=float))


def tf_constant(k) -> TransferFunction:
    return TransferFunction(np.array([float(k)]), np.array([1.0]))


def tf_series(a: TransferFunction, b: TransferFunction) -> TransferFunction:
    """Product a*b.  Common factors are kept (no automatic cancellation)."""
    return TransferFunction(poly_mul(a.num, b.num), poly_mul(a.den, b.den))


def tf_add(a: TransferFunction, b: TransferFunction) -> TransferFunction:
    """Sum a+b; identical denominators short-circuit to numerator addition."""
    if np.array_equal(a.den, b.den):
        return TransferFunction(poly_add(a.num, b.num), a.den)
    return TransferFunction(
        poly_add(poly_mul(a.num, b.den), poly_mul(b.num, a.den)),
        poly_mul(a.den, b.den),
    )


def _closed_loop_den(loop: TransferFunction) -> np.ndarray:
    den = poly_add(loop.num, loop.den)
    if is_zero_poly(den):
        raise SingularLoopError("1 + loop gain is identically zero")
    return den


def tf_feedback(loop_gain: TransferFunction) -> TransferFunction:
    """Negative-unity-feedback closure loop/(1 + loop)."""
    return TransferFunction(loop_gain.num, _closed_loop_den(loop_gain))


def tf_sensitivity(loop_gain: TransferFunction) -> TransferFunction:
    """Sensitivity 1/(1 + loop); shares the feedback closure's denominator."""
    return TransferFunction(loop_gain.den, _closed_loop_den(loop_gain))


def freq_response(sys: TransferFunction, omega: float) -> complex:
    """Evaluate num(jw)/den(jw); exact pole hits raise PoleOnAxisError."""
    s = 1j * float(omega)
    d = poly_eval(sys.den, s)
    if d == 0:
        raise PoleOnAxisError(f"denominator vanishes at omega={omega!r}")
    return complex(poly_eval(sys.num, s)) / complex(d)


def freq_response_many(sys: TransferFunction, omegas) -> np.ndarray:
    s = 1j * np.asarray(omegas, dtype=float)
    d = poly_eval(sys.den, s)
    if np.any(d == 0):
        bad = np.asarray(omegas)[np.nonzero(d == 0)][:3]
        raise PoleOnAxisError(f"denominator vanishes on the grid near omega={bad!r}")
    return poly_eval(sys.num, s) / d


def poles(sys) -> np.ndarray:
    """Denominator roots (TransferFunction) or eigenvalues of A (StateSpace)."""
    if isinstance(sys, StateSpace):
        if sys.n == 0:
            return np.zeros(0, dtype=complex)
        return np.linalg.eigvals(sys.A)
    return np.roots(sys.den)


def is_stable(sys, margin: float = 0.0) -> bool:
    """Strict open-left-half-plane test on the poles."""
    p = poles(sys)
    if p.size == 0:
        return True
    return bool(np.all(p.real < -margin))


def minreal(sys: TransferFunction, tol: float = 1e-7) -> TransferFunction:
    """Cancel num/den root pairs matching within relative tolerance `tol`."""
    if is_zero_poly(sys.num):
        return TransferFunction(np.zeros(1), np.ones(1))
    zn = np.roots(sys.num)
    zd = np.roots(sys.den)
    gain_n = sys.num[0]
    keep_d = np.ones(zd.size, dtype=bool)
    keep_n = np.ones(zn.size, dtype=bool)
    for i, rn in enumerate(zn):
        best, best_dist = -1, np.inf
        for j, rd in enumerate(zd):
            if not keep_d[j]:
                continue
            dist = abs(rn - rd)
            if dist < best_dist:
                best, best_dist = j, dist
        if best >= 0 and best_dist <= tol * max(abs(rn), abs(zd[best])):
            keep_n[i] = False
            keep_d[best] = False
    num = gain_n * np.real(np.poly(zn[keep_n])) if np.any(keep_n) else np.array([gain_n])
    den = np.real(np.poly(zd[keep_d])) if np.any(keep_d) else np.ones(1)
    return TransferFunction(num, den)


# ---------------------------------------------------------------------------
# frequency grids

@dataclass(frozen=True, eq=False)
class FrequencyGrid:
    """Strictly increasing, positive angular frequencies (rad/s)."""

    omegas: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.omegas, dtype=float).ravel()
        if w.size == 0:
            raise ValueError("frequency grid is empty")
        if np.any(w <= 0.0):
            raise ValueError("frequency grid entries must be positive")
        if np.any(np.diff(w) <= 0.0):
            raise ValueError("frequency grid must be strictly increasing")
        object.__setattr__(self, "omegas", w)

    def __len__(self):
        return self.omegas.size


RIPPLE_OMEGA = 2.0 * np.pi * 120.0


def default_grid(
    omega_min: float = 1e-1,
    omega_max: float = 1e6,
    points: int = 400,
    refine_center: float = RIPPLE_OMEGA,
    refine_factor: int = 10,
) -> FrequencyGrid:
    """400-point log grid with 10x density over one decade around the notch."""
    base = np.logspace(np.log10(omega_min), np.log10(omega_max), points)
    per_decade = points / (np.log10(omega_max) - np.log10(omega_min))
    lo = np.log10(refine_center) - 0.5
    hi = np.log10(refine_center) + 0.5
    extra = np.logspace(lo, hi, int(np.ceil(per_decade * refine_factor)))
    return FrequencyGrid(np.unique(np.concatenate([base, extra])))


def _grid_array(grid) -> np.ndarray:
    if isinstance(grid, FrequencyGrid):
        return grid.omegas
    return FrequencyGrid(np.asarray(grid, dtype=float)).omegas


# ---------------------------------------------------------------------------
# state space

@dataclass(frozen=True, eq=False)
class StateSpace:
    """Continuous-time realization (A, B, C, D)."""

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        B = np.atleast_2d(np.asarray(self.B, dtype=float))
        C = np.atleast_2d(np.asarray(self.C, dtype=float))
        D = np.atleast_2d(np.asarray(self.D, dtype=float))
        n = A.shape[0]
        if A.shape != (n, n):
            raise ValueError(f"A must be square, got {A.shape}")
        if n == 0:
            B = B.reshape(0, B.shape[1] if B.size else D.shape[1])
            C = C.reshape(C.shape[0] if C.size else D.shape[0], 0)
        if B.shape[0] != n:
            raise ValueError(f"B rows {B.shape[0]} != n {n}")
        if C.shape[1] != n:
            raise ValueError(f"C cols {C.shape[1]} != n {n}")
        if D.shape != (C.shape[0], B.shape[1]):
            raise ValueError(f"D shape {D.shape} inconsistent with C,B")
        for name, M in (("A", A), ("B", B), ("C", C), ("D", D)):
            if not np.all(np.isfinite(M)):
                raise ValueError(f"{name} has non-finite entries")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "C", C)
        object.__setattr__(self, "D", D)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def n_inputs(self) -> int:
        return self.B.shape[1]

    @property
    def n_outputs(self) -> int:
        return self.C.shape[0]


@dataclass(frozen=True, eq=False)
class DiscreteStateSpace:
    """Discrete-time realization at sample period ts."""

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray
    ts: float

    def dc_gain(self) -> np.ndarray:
        if self.A.shape[0] == 0:
            return self.D
        I = np.eye(self.A.shape[0])
        return self.C @ np.linalg.solve(I - self.A, self.B) + self.D


def tf_to_ss(sys: TransferFunction) -> StateSpace:
    """Controllable-canonical (companion) realization of a proper SISO system."""
    if not sys.is_proper:
        raise ValueError("improper transfer function has no state-space realization")
    n = sys.degree_den
    den = sys.den  # monic
    num = np.zeros(n + 1)
    num[n + 1 - sys.num.size:] = sys.num
    d0 = num[0]
    rem = num[1:] - d0 * den[1:]  # strictly proper part
    if n == 0:
        return StateSpace(np.zeros((0, 0)), np.zeros((0, 1)), np.zeros((1, 0)), [[d0]])
    A = np.zeros((n, n))
    A[:-1, 1:] = np.eye(n - 1)
    A[-1, :] = -den[1:][::-1]
    B = np.zeros((n, 1))
    B[-1, 0] = 1.0
    C = rem[::-1].reshape(1, n)
    return StateSpace(A, B, C, [[d0]])


def ss_to_tf(sys: StateSpace) -> TransferFunction:
    """SISO realization back to a rational function via characteristic polynomials."""
    if sys.n_inputs != 1 or sys.n_outputs != 1:
        raise ValueError("ss_to_tf handles SISO systems only")
    d0 = float(sys.D[0, 0])
    if sys.n == 0:
        return tf_constant(d0)
    den = np.poly(sys.A)
    num_sp = np.poly(sys.A - sys.B @ sys.C) - den
    return TransferFunction(poly_add(num_sp, poly_scale(den, d0)), den)


def _pair_conjugates(values: np.ndarray, rel_tol: float = 1e-9):
    """Split roots of a real polynomial into real values and upper-half pairs."""
    real_vals, complex_vals = [], []
    for v in values:
        if abs(v.imag) <= rel_tol * max(1.0, abs(v)):
            real_vals.append(v.real)
        elif v.imag > 0:
            complex_vals.append(v)
    return real_vals, complex_vals


def modal_ss(sys: TransferFunction) -> StateSpace:
    """Modal (diagonal / 2x2-block) realization.

    Well conditioned for denominators whose roots span many decades, where
    the companion form is numerically unusable.  Requires simple poles;
    clustered poles fall back to the companion realization.
    """
    if not sys.is_proper:
        raise ValueError("improper transfer function has no state-space realization")
    n = sys.degree_den
    if n == 0:
        return tf_to_ss(sys)
    den = sys.den
    num = np.zeros(n + 1)
    num[n + 1 - sys.num.size:] = sys.num
    d0 = num[0]
    rem = as_poly(num[1:] - d0 * den[1:])
    p = np.roots(den)
    # multiplicity guard: modal form assumes simple poles
    if p.size > 1:
        dists = np.abs(p[:, None] - p[None, :]) + np.diag(np.full(p.size, np.inf))
        scale = np.maximum(np.abs(p)[:, None], np.abs(p)[None, :])
        if np.min(dists / np.maximum(scale, 1e-30)) < 1e-7:
            return tf_to_ss(sys)
    dden = np.polyder(den)
    real_p, cplx_p = _pair_conjugates(p)
    real_r = poly_eval(rem, np.asarray(real_p)) / poly_eval(dden, np.asarray(real_p)) if real_p else np.zeros(0)
    blocks_A, rows_B, cols_C = [], [], []
    for pk, rk in zip(real_p, np.real(real_r)):
        g = np.sqrt(abs(rk))
        blocks_A.append(np.array([[pk]]))
        rows_B.append(np.array([[g if rk != 0 else 0.0]]))
        cols_C.append(np.array([[np.sign(rk) * g]]))
    for pk in cplx_p:
        rk = complex(poly_eval(rem, pk) / poly_eval(dden, pk))
        a, b = pk.real, pk.imag
        g = np.sqrt(abs(rk)) if rk != 0 else 0.0
        u = rk / g if g else 0.0
        v = g
        blocks_A.append(np.array([[a, -b], [b, a]]))
        rows_B.append(np.array([[np.real(v)], [np.imag(v)]]))
        cols_C.append(np.array([[2.0 * np.real(u), -2.0 * np.imag(u)]]))
    A = scipy.linalg.block_diag(*blocks_A) if blocks_A else np.zeros((0, 0))
    B = np.vstack(rows_B) if rows_B else np.zeros((0, 1))
    C = np.hstack(cols_C) if cols_C else np.zeros((1, 0))
    return StateSpace(A, B, C, [[d0]])


def ss_stack_matrix(entries) -> StateSpace:
    """Assemble a MIMO StateSpace from a 2-D list of SISO realizations.

    entries[i][j] realizes the map from input j to output i; states are the
    block-diagonal union.
    """
    p = len(entries)
    m = len(entries[0])
    blocks, srcs = [], []
    for i in range(p):
        if len(entries[i]) != m:
            raise ValueError("ragged entry matrix")
        for j in range(m):
            blocks.append(entries[i][j])
            srcs.append((i, j))
    n_total = sum(b.n for b in blocks)
    A = np.zeros((n_total, n_total))
    B = np.zeros((n_total, m))
    C = np.zeros((p, n_total))
    D = np.zeros((p, m))
    at = 0
    for blk, (i, j) in zip(blocks, srcs):
        k = blk.n
        A[at:at + k, at:at + k] = blk.A
        B[at:at + k, j:j + 1] = blk.B
        C[i:i + 1, at:at + k] = blk.C
        D[i, j] += blk.D[0, 0]
        at += k
    return StateSpace(A, B, C, D)


def ss_response(sys: StateSpace, omega: float) -> np.ndarray:
    """Complex response matrix C (jwI - A)^-1 B + D."""
    if sys.n == 0:
        return sys.D.astype(complex)
    M = 1j * float(omega) * np.eye(sys.n) - sys.A
    return sys.C @ np.linalg.solve(M, sys.B) + sys.D


def discretize_tustin(sys: StateSpace, ts: float) -> DiscreteStateSpace:
    """Bilinear-transform discretization; preserves DC gain exactly."""
    if ts <= 0:
        raise ValueError("sample period must be positive")
    n = sys.n
    if n == 0:
        return DiscreteStateSpace(sys.A, sys.B, sys.C, sys.D, ts)
    I = np.eye(n)
    M = I - sys.A * (ts / 2.0)
    try:
        Ad = np.linalg.solve(M, I + sys.A * (ts / 2.0))
        Bd = np.linalg.solve(M, sys.B) * ts
        Cd = np.linalg.solve(M.T, sys.C.T).T
    except np.linalg.LinAlgError as exc:
        raise ValueError("I - A*ts/2 is singular; decrease ts") from exc
    Dd = sys.D + Cd @ sys.B * (ts / 2.0)
    return DiscreteStateSpace(Ad, Bd, Cd, Dd, ts)


# ---------------------------------------------------------------------------
# Lyapunov equation and balanced truncation

def lyap_solve(A, Q) -> np.ndarray:
    """Solve A P + P A' + Q = 0 by dense vectorization (small orders only)."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    n = A.shape[0]
    if A.shape != (n, n) or Q.shape != (n, n):
        raise ValueError("A and Q must be square and same size")
    if not np.allclose(Q, Q.T, rtol=1e-10, atol=1e-12 * max(1.0, np.abs(Q).max())):
        raise ValueError("Q must be symmetric")
    if n == 0:
        return np.zeros((0, 0))
    if not np.all(np.linalg.eigvals(A).real < 0):
        raise UnstableSystemError("A must be Hurwitz for the Lyapunov solve")
    I = np.eye(n)
    M = np.kron(I, A) + np.kron(A, I)
    vec_p = np.linalg.solve(M, -Q.ravel(order="F"))
    P = vec_p.reshape((n, n), order="F")
    return 0.5 * (P + P.T)


def balanced_truncation(sys: StateSpace, order: int):
    """Gramian-based balanced truncation.

    Returns (reduced StateSpace, hankel singular values of the full system).
    The kept realization is the balanced one truncated to `order` states;
    the familiar bound ||G - Gr||_inf <= 2 * sum(discarded hankel values)
    applies.
    """
    if not (0 < order <= sys.n):
        raise ValueError(f"order must be in 1..{sys.n}")
    if not is_stable(sys):
        raise UnstableSystemError("balanced truncation requires a stable system")
    P = lyap_solve(sys.A, sys.B @ sys.B.T)
    Q = lyap_solve(sys.A.T, sys.C.T @ sys.C)
    try:
        Lp = scipy.linalg.cholesky(P, lower=True)
        Lq = scipy.linalg.cholesky(Q, lower=True)
    except scipy.linalg.LinAlgError as exc:
        raise ConditioningError("gramian is not positive definite to working precision") from exc
    U, s, Vt = np.linalg.svd(Lq.T @ Lp)
    if s[-1] <= 0 or not np.all(np.isfinite(s)):
        raise ConditioningError("degenerate Hankel spectrum")
    sqrt_inv = np.diag(1.0 / np.sqrt(s))
    T = Lp @ Vt.T @ sqrt_inv
    Tinv = sqrt_inv @ U.T @ Lq.T
    Ab = Tinv @ sys.A @ T
    Bb = Tinv @ sys.B
    Cb = sys.C @ T
    r = order
    reduced = StateSpace(Ab[:r, :r], Bb[:r, :], Cb[:, :r], sys.D)
    return reduced, s


# ---------------------------------------------------------------------------
# H-infinity norm

def hinf_norm_grid_oracle(sys, grid) -> float:
    """Max response magnitude over the grid; a lower bound on the true norm."""
    omegas = _grid_array(grid)
    if isinstance(sys, TransferFunction):
        return float(np.max(np.abs(freq_response_many(sys, omegas))))
    best = 0.0
    for w in omegas:
        g = np.linalg.svd(ss_response(sys, w), compute_uv=False)
        best = max(best, float(g[0]) if g.size else 0.0)
    return best


def _sigma_max(M) -> float:
    s = np.linalg.svd(np.atleast_2d(M), compute_uv=False)
    return float(s[0]) if s.size else 0.0


def _hamiltonian_has_imag_eig(sys: StateSpace, gamma: float) -> bool:
    dmax = _sigma_max(sys.D)
    if gamma <= dmax * (1.0 + 1e-14):
        return True  # norm >= sigma_max(D) always
    m = sys.n_inputs
    p = sys.n_outputs
    R = gamma**2 * np.eye(m) - sys.D.T @ sys.D
    Rinv = np.linalg.inv(R)
    M = sys.A + sys.B @ Rinv @ sys.D.T @ sys.C
    H = np.block([
        [M, sys.B @ Rinv @ sys.B.T],
        [-sys.C.T @ (np.eye(p) + sys.D @ Rinv @ sys.D.T) @ sys.C, -M.T],
    ])
    eig = np.linalg.eigvals(H)
    return bool(np.any(np.abs(eig.real) <= 1e-8 * np.maximum(1.0, np.abs(eig))))


def _internal_oracle_grid(sys: StateSpace) -> np.ndarray:
    p = poles(sys)
    mags = np.abs(p[np.abs(p) > 0]) if p.size else np.zeros(0)
    lo = np.log10(mags.min() / 100.0) if mags.size else -2.0
    hi = np.log10(mags.max() * 100.0) if mags.size else 2.0
    grid = np.logspace(lo, hi, 240)
    res = np.abs(p.imag[np.abs(p.imag) > 0]) if p.size else np.zeros(0)
    if res.size:
        spread = np.geomspace(0.99, 1.01, 9)
        grid = np.concatenate([grid] + [w * spread for w in res])
    return np.unique(grid)


def hinf_norm(sys: StateSpace, tol: float = 1e-6) -> float:
    """H-infinity norm by bisection on the Hamiltonian imaginary-eigenvalue test.

    Bracket: lower bound from a frequency-grid oracle (plus sigma_max(D)),
    upper bound certified by the bounded-real test with doubling.  Requires
    a stable system.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if sys.n == 0:
        return _sigma_max(sys.D)
    if not is_stable(sys):
        raise UnstableSystemError("H-infinity norm is defined here for stable systems only")
    lb = hinf_norm_grid_oracle(sys, _internal_oracle_grid(sys))
    lb = max(lb, _sigma_max(sys.D), _sigma_max(ss_response(sys, 0.0).real))
    if lb == 0.0:
        # response is identically zero only if no input-to-output path exists
        if _sigma_max(sys.B) == 0.0 or _sigma_max(sys.C) == 0.0:
            return 0.0
        lb = 1e-12
    hi = 2.0 * lb
    for _ in range(80):
        if not _hamiltonian_has_imag_eig(sys, hi):
            break
        hi *= 2.0
    else:
        raise ConditioningError("bisection bracket not found (upper bound kept failing)")
    lo = lb
    while (hi - lo) > tol * hi:
        mid = 0.5 * (lo + hi)
        if _hamiltonian_has_imag_eig(sys, mid):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
