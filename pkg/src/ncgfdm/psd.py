"""Out-of-band power measurement: oversampled synthesis and Welch PSD.

Sidelobe behaviour lives *between* the sample-rate images: each block is a
trigonometric polynomial whose content fills the coarse Nyquist band, so the
block-boundary discontinuities only show up when the stream is evaluated on
a finer time grid.  Each block (and the smooth corrections) is synthesised
directly on the oversampled grid from its spectrum using signed bin
frequencies, the concatenated stream is fed to an averaged periodogram, and
frequencies are reported in units of the subcarrier spacing.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import ParameterError
from .low_interference import TruncatedBasisSet, solve_coefficients_li
from .params import WaveformParams, signed_bins
from .prototype import TransmitterMatrix
from .smoothing import BasisSet, ConstraintMatrices, smooth_stream


@dataclass(frozen=True)
class PsdEstimate:
    """Averaged-periodogram PSD with frequencies in subcarrier spacings."""

    freqs_normalized: np.ndarray
    psd_db: np.ndarray
    nfft: int
    segments: int
    oversampling: int


def fine_synthesis_matrix(N: int, n_cp: int, oversampling: int) -> np.ndarray:
    """Evaluation of a length-N spectrum on the oversampled CP-inserted grid.

    Rows are time points t = -n_cp .. N-1/os in steps of 1/os; columns carry
    exp(j*2*pi*l_signed*t/N)/N so that multiplying a block's DFT reproduces
    the block samples at integer t and band-limited interpolation between.
    """
    lt = signed_bins(N)
    t = np.arange(-n_cp * oversampling, N * oversampling) / oversampling
    return np.exp(2j * np.pi * np.outer(t, lt) / N) / N


def fine_basis_front(basis: BasisSet, L: int, oversampling: int) -> np.ndarray:
    """Basis signals on the oversampled front grid t = -n_cp .. -n_cp+L-1/os."""
    N, n_cp = basis.N, basis.n_cp
    lt = signed_bins(N)
    t = np.arange(0, L * oversampling) / oversampling  # offset from -n_cp
    E = np.exp(2j * np.pi * np.outer(t, lt) / N) / N
    cols = []
    for v in range(basis.V + 1):
        cols.append(E @ ((2j * np.pi * lt / N) ** v * basis.F0))
    return np.stack(cols, axis=1)


def continuous_window(kind: str, L: int, oversampling: int) -> np.ndarray:
    """The truncation window evaluated on the oversampled front grid."""
    from .low_interference import make_window

    t = np.arange(0, L * oversampling) / oversampling
    if kind == "ones":
        return np.ones(t.size)
    coarse = make_window(kind, L)  # validates the kind
    if kind == "triangular":
        z = 1.0 - t / (L - 1)
    elif kind == "hanning":
        z = 0.5 * (1.0 + np.cos(np.pi * t / (L - 1)))
    else:  # blackman
        z = 0.42 + 0.5 * np.cos(np.pi * t / (L - 1)) + 0.08 * np.cos(2 * np.pi * t / (L - 1))
    z[t > (L - 1)] = 0.0
    return z


def synthesize_stream(
    tm: TransmitterMatrix,
    params: WaveformParams,
    grids,
    oversampling: int = 4,
    cm: ConstraintMatrices | None = None,
    basis: BasisSet | None = None,
    truncated: TruncatedBasisSet | None = None,
) -> np.ndarray:
    """Oversampled time stream of a block sequence.

    Without ``cm`` the plain GFDM stream is produced.  With ``cm`` and
    ``basis`` the fully smoothed stream is produced; adding ``truncated``
    switches to the low-interference variant (windowed front superposition
    against the unsmoothed previous block, plus the terminal tail).
    """
    grids = [np.asarray(d, dtype=complex) for d in grids]
    if not grids:
        raise ParameterError("synthesize_stream requires at least one grid")
    N, n_cp = params.N, params.n_cp
    E = fine_synthesis_matrix(N, n_cp, oversampling)
    if cm is None:
        return np.concatenate([E @ np.fft.fft(tm.A @ d) for d in grids])
    if truncated is None:
        records = smooth_stream(tm, cm, basis, grids)
        return np.concatenate([E @ np.fft.fft(r.x_bar.body) for r in records])
    L = truncated.L
    fine_f = fine_basis_front(basis, L, oversampling)
    z = continuous_window(truncated.window.kind, L, oversampling)
    pieces = []
    d_prev = np.zeros(N, dtype=complex)
    for d in grids:
        b = solve_coefficients_li(cm, d_prev, d)
        piece = E @ np.fft.fft(tm.A @ d)
        piece[:L * oversampling] += (fine_f @ b) * z
        pieces.append(piece)
        d_prev = d
    b = solve_coefficients_li(cm, d_prev, np.zeros(N, dtype=complex))
    pieces.append((fine_f @ b) * z)
    return np.concatenate(pieces)


def estimate_psd(
    stream: np.ndarray,
    nfft: int,
    overlap_fraction: float = 0.5,
    oversampling: int = 1,
    subcarriers: int = 1,
) -> PsdEstimate:
    """Averaged Hann-windowed periodograms over overlapping segments.

    ``nfft`` must be a power of two (documented constraint).  Frequencies
    are normalised to the subcarrier spacing: the stream's sample rate is
    ``oversampling`` times the block rate of ``subcarriers`` spacings.
    """
    stream = np.asarray(stream)
    if nfft < 2 or (nfft & (nfft - 1)) != 0:
        raise ParameterError(f"nfft must be a power of two (got {nfft})")
    if stream.size < nfft:
        raise ParameterError(f"stream of {stream.size} samples is shorter than nfft={nfft}")
    if not (0.0 <= overlap_fraction < 1.0):
        raise ParameterError(f"overlap_fraction must lie in [0, 1) (got {overlap_fraction})")
    window = np.hanning(nfft)
    step = max(1, int(round(nfft * (1.0 - overlap_fraction))))
    nseg = (stream.size - nfft) // step + 1
    acc = np.zeros(nfft)
    for s in range(nseg):
        seg = stream[s * step:s * step + nfft] * window
        acc += np.abs(np.fft.fft(seg)) ** 2
    acc /= nseg * np.sum(window ** 2)
    psd = np.fft.fftshift(acc)
    freqs = np.fft.fftshift(np.fft.fftfreq(nfft)) * oversampling * subcarriers
    return PsdEstimate(
        freqs_normalized=freqs,
        psd_db=10.0 * np.log10(psd + 1e-300),
        nfft=nfft,
        segments=nseg,
        oversampling=oversampling,
    )


def normalize_plateau(estimate: PsdEstimate, band_edge: float, fraction: float = 0.8) -> PsdEstimate:
    """Shift the dB scale so the in-band plateau sits at 0 dB.

    The plateau level is the mean PSD over |f| < fraction * band_edge, with
    ``band_edge`` in subcarrier spacings (K/2 when every subcarrier is
    active).
    """
    mask = np.abs(estimate.freqs_normalized) < fraction * band_edge
    if not mask.any():
        raise ParameterError("no PSD bins inside the requested plateau region")
    level = float(np.mean(estimate.psd_db[mask]))
    return replace(estimate, psd_db=estimate.psd_db - level)


def psd_at_offset(estimate: PsdEstimate, offset: float, halfwidth: float = 1.0) -> float:
    """Mean PSD (dB) in a window of +-halfwidth subcarrier spacings around offset."""
    mask = np.abs(estimate.freqs_normalized - offset) < halfwidth
    if not mask.any():
        raise ParameterError(f"no PSD bins within {halfwidth} of offset {offset}")
    return float(np.mean(estimate.psd_db[mask]))


def next_pow2(n: int) -> int:
    """Smallest power of two >= n."""
    return 1 << max(1, int(np.ceil(np.log2(max(2, n)))))
