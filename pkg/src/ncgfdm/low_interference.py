"""Low-interference variant: truncated, windowed smooth signal in the CP.

Instead of spreading the smooth signal over the whole block, the basis
signals are soft-truncated by a zero-edged window and superposed onto the
front L samples of the CP-inserted block.  With L <= n_cp the correction
lives entirely inside the prefix, so a plain receiver that discards the CP
sees an unmodified GFDM block; continuity is enforced against the
*unsmoothed* previous block, which removes the w recursion from the
coefficient solve.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError
from .modem import TimeBlock
from .params import WaveformParams
from .prototype import TransmitterMatrix
from .smoothing import BasisSet, ConstraintMatrices, block_boundary_derivatives

WINDOW_KINDS = ("triangular", "hanning", "blackman", "ones")


@dataclass(frozen=True)
class TruncationWindow:
    """Right half of a baseband window: z[0] = 1 at the continuity point.

    Zero-edged kinds (triangular, hanning, blackman) end at z[L-1] = 0 so the
    correction fades smoothly into the untouched signal; the degenerate
    "ones" window exists for equivalence tests only.
    """

    kind: str
    L: int
    samples: np.ndarray


def make_window(kind: str, L: int) -> TruncationWindow:
    """Sample the right half of the named window on n = 0..L-1."""
    if L < 2:
        raise ParameterError(f"window length must be at least 2 (got {L})")
    kind = kind.lower()
    n = np.arange(L)
    if kind == "triangular":
        z = 1.0 - n / (L - 1)
    elif kind == "hanning":
        z = 0.5 * (1.0 + np.cos(np.pi * n / (L - 1)))
    elif kind == "blackman":
        z = 0.42 + 0.5 * np.cos(np.pi * n / (L - 1)) + 0.08 * np.cos(2 * np.pi * n / (L - 1))
    elif kind == "ones":
        z = np.ones(L)
    else:
        raise ParameterError(f"unknown window kind {kind!r}; choose from {WINDOW_KINDS}")
    return TruncationWindow(kind=kind, L=L, samples=z)


@dataclass(frozen=True)
class TruncatedBasisSet:
    """Windowed basis columns supported on the front L samples of the block.

    Q_tilde[n, v] = f_v(n - n_cp) * z[n] for n = 0..L-1 (offsets from the
    block start at -n_cp); zero elsewhere.  Row 0 equals the untruncated
    basis row because z[0] = 1.
    """

    Q_tilde: np.ndarray
    window: TruncationWindow
    n_cp: int

    @property
    def L(self) -> int:
        return self.window.L


def truncate_basis(basis: BasisSet, window: TruncationWindow) -> TruncatedBasisSet:
    """Multiply the leading basis samples by the window."""
    total = basis.Q_full.shape[0]
    if window.L > total:
        raise ParameterError(
            f"window length L={window.L} exceeds the CP-inserted block length {total}"
        )
    Q_tilde = basis.Q_full[:window.L] * window.samples[:, None]
    return TruncatedBasisSet(Q_tilde=Q_tilde, window=window, n_cp=basis.n_cp)


def solve_coefficients_li(
    cm: ConstraintMatrices, d_prev: np.ndarray, d_cur: np.ndarray
) -> np.ndarray:
    """Coefficient solve against the unsmoothed previous block (no w recursion)."""
    return np.linalg.solve(cm.P_f, cm.P_1 @ d_prev - cm.P_2 @ d_cur)


def apply_front_superposition(
    block: TimeBlock, tb: TruncatedBasisSet, b: np.ndarray, is_terminal: bool = False
) -> TimeBlock | np.ndarray:
    """Add the windowed smooth signal over the first L samples of CP+body.

    With ``is_terminal`` the data block is ignored and the standalone smooth
    tail Q_tilde b is returned; it closes the stream after the last block.
    """
    w_front = tb.Q_tilde @ b
    if is_terminal:
        return w_front
    samples = block.with_cp
    if tb.L > samples.size:
        raise ParameterError(
            f"L={tb.L} exceeds the CP-inserted block length {samples.size}"
        )
    samples[:tb.L] += w_front
    n_cp = block.cp.size
    return TimeBlock(body=samples[n_cp:], cp=samples[:n_cp], block_index=block.block_index)


@dataclass(frozen=True)
class LiBlockRecord:
    """One low-interference block: emitted samples plus bookkeeping."""

    x_bar: TimeBlock
    b: np.ndarray
    d: np.ndarray

    @property
    def block_index(self) -> int:
        return self.x_bar.block_index


def li_smooth_stream(
    tm: TransmitterMatrix,
    cm: ConstraintMatrices,
    tb: TruncatedBasisSet,
    grids,
):
    """Smooth a stream with front superposition; returns (records, tail).

    The terminal tail is the standalone windowed correction emitted after
    the final block so the stream ends as smoothly as it ran.
    """
    from .modem import add_cyclic_prefix

    grids = [np.asarray(d, dtype=complex) for d in grids]
    if not grids:
        raise ParameterError("li_smooth_stream requires at least one data grid")
    N = cm.N
    records = []
    d_prev = np.zeros(N, dtype=complex)
    for i, d in enumerate(grids):
        b = solve_coefficients_li(cm, d_prev, d)
        block = add_cyclic_prefix(tm.A @ d, tb.n_cp, block_index=i)
        records.append(LiBlockRecord(x_bar=apply_front_superposition(block, tb, b), b=b, d=d))
        d_prev = d
    tail = apply_front_superposition(
        add_cyclic_prefix(np.zeros(N, complex), tb.n_cp, block_index=len(grids)),
        tb,
        solve_coefficients_li(cm, d_prev, np.zeros(N, complex)),
        is_terminal=True,
    )
    return records, tail


def boundary_residual_li(
    record_prev: LiBlockRecord,
    record_cur: LiBlockRecord,
    cm: ConstraintMatrices,
    basis: BasisSet,
    v: int,
) -> float:
    """Boundary residual of the low-interference design at derivative order v.

    Continuity is enforced against the *unsmoothed* previous block, so both
    boundary derivative sets are evaluated by spectral differentiation of the
    unsmoothed block bodies (rebuilt from the stored data grids); the current
    side adds the designed boundary derivatives of the smooth signal,
    Sum_u b_u f_{u+v}(-n_cp), which the window leaves intact at the
    enforcement point (z starts at 1).  The v = 0 order is additionally
    sample-exact on the emitted stream.
    """
    if v > cm.V:
        raise ParameterError(f"order v={v} exceeds the enforced order V={cm.V}")
    prev_body = np.fft.ifft(cm.G @ record_prev.d)
    cur_body = np.fft.ifft(cm.G @ record_cur.d)
    _, prev_end = block_boundary_derivatives(prev_body, v, basis.n_cp)
    cur_start, _ = block_boundary_derivatives(cur_body, v, basis.n_cp)
    bd = basis.boundary_values
    w_deriv = np.sum(record_cur.b * bd[v:v + cm.V + 1])
    return float(np.abs(prev_end[v] - (cur_start[v] + w_deriv)))
