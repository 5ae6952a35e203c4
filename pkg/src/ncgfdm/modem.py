"""Bit mapping, block modulation, cyclic prefix, and linear demodulators.

Data grids are flat complex vectors of length N ordered subcarrier-major
within each subsymbol (entry k + m*K carries subcarrier k of subsymbol m),
matching the column order of the transmitter matrix.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EqualizationError, ParameterError
from .prototype import TransmitterMatrix


@dataclass(frozen=True)
class Constellation:
    """Unit-average-power constellation with Gray bit labelling.

    ``points[i]`` is the symbol whose bit label is the binary expansion of i
    (most significant bit first).  The labelling is a bijection by
    construction.
    """

    name: str
    points: np.ndarray
    bits_per_symbol: int

    @property
    def labels(self) -> np.ndarray:
        """(2**b, b) array of bit labels, row i = bits of point i."""
        b = self.bits_per_symbol
        idx = np.arange(2 ** b)
        return ((idx[:, None] >> np.arange(b - 1, -1, -1)) & 1).astype(np.int8)


def _gray_to_level_rank(bits: np.ndarray) -> np.ndarray:
    """Decode Gray-coded bit rows to level ranks (cumulative XOR)."""
    out = np.zeros(len(bits), dtype=int)
    acc = np.zeros(len(bits), dtype=int)
    for col in range(bits.shape[1]):
        acc ^= bits[:, col]
        out = (out << 1) | acc
    return out


def make_constellation(name: str = "16qam") -> Constellation:
    """Build a Gray-labelled square QAM constellation ("4qam", "16qam", "64qam").

    Bits per symbol split evenly between the I and Q axes; each half is
    Gray-mapped onto the PAM levels, and the points are scaled to unit
    average power.
    """
    key = name.lower().replace("-", "")
    orders = {"4qam": 4, "qpsk": 4, "16qam": 16, "64qam": 64}
    if key not in orders:
        raise ParameterError(f"unknown constellation {name!r}; choose from {sorted(orders)}")
    order = orders[key]
    bps = int(np.log2(order))
    half = bps // 2
    L = 2 ** half
    levels = np.arange(L) * 2 - (L - 1)
    idx = np.arange(order)
    bits = ((idx[:, None] >> np.arange(bps - 1, -1, -1)) & 1).astype(np.int8)
    i_rank = _gray_to_level_rank(bits[:, :half])
    q_rank = _gray_to_level_rank(bits[:, half:])
    pts = levels[i_rank] + 1j * levels[q_rank]
    pts = pts / np.sqrt(np.mean(np.abs(pts) ** 2))
    return Constellation(name=key, points=pts, bits_per_symbol=bps)


def map_bits(bits: np.ndarray, constellation: Constellation) -> np.ndarray:
    """Map a flat bit vector onto a data grid (one symbol per bits_per_symbol bits)."""
    bits = np.asarray(bits, dtype=np.int8).ravel()
    b = constellation.bits_per_symbol
    if bits.size % b:
        raise ParameterError(f"bit count {bits.size} is not a multiple of {b}")
    groups = bits.reshape(-1, b)
    idx = groups @ (1 << np.arange(b - 1, -1, -1))
    return constellation.points[idx]


def demap_grid(grid: np.ndarray, constellation: Constellation) -> np.ndarray:
    """Nearest-point demapping of a (soft or hard) grid back to bits."""
    idx = nearest_point_index(grid, constellation)
    return constellation.labels[idx].ravel()


def nearest_point_index(soft: np.ndarray, constellation: Constellation) -> np.ndarray:
    """Index of the nearest constellation point; exact ties take the lowest index."""
    soft = np.asarray(soft)
    d = np.abs(soft[..., None] - constellation.points)
    return np.argmin(d, axis=-1)


def hard_decide(soft: np.ndarray, constellation: Constellation) -> np.ndarray:
    """Minimum-Euclidean-distance hard decision, tie-broken to the lowest index."""
    return constellation.points[nearest_point_index(soft, constellation)]


@dataclass(frozen=True)
class TimeBlock:
    """One CP-prefixed time-domain block: ``cp`` then ``body`` on the wire."""

    body: np.ndarray
    cp: np.ndarray
    block_index: int = 0

    @property
    def with_cp(self) -> np.ndarray:
        return np.concatenate([self.cp, self.body])


def add_cyclic_prefix(body: np.ndarray, n_cp: int, block_index: int = 0) -> TimeBlock:
    """Prefix a block with the copy of its last n_cp samples."""
    if n_cp > body.size:
        raise ParameterError(f"n_cp={n_cp} exceeds block length {body.size}")
    cp = body[body.size - n_cp:].copy() if n_cp else np.zeros(0, dtype=body.dtype)
    return TimeBlock(body=body.copy(), cp=cp, block_index=block_index)


def remove_cyclic_prefix(samples: np.ndarray, N: int, n_cp: int) -> np.ndarray:
    """Drop the prefix and any convolution tail, returning the N body samples."""
    if samples.size < n_cp + N:
        raise ParameterError(f"received block of {samples.size} samples is shorter than n_cp+N")
    return samples[n_cp:n_cp + N]


def modulate(tm: TransmitterMatrix, d: np.ndarray, n_cp: int = 0, block_index: int = 0) -> TimeBlock:
    """Modulate a data grid through A and insert the cyclic prefix."""
    d = np.asarray(d, dtype=complex)
    if d.shape != (tm.N,):
        raise ParameterError(f"data grid must have shape ({tm.N},), got {d.shape}")
    body = tm.A @ d
    return add_cyclic_prefix(body, n_cp, block_index)


def assemble_stream(blocks) -> np.ndarray:
    """Concatenate CP+body of consecutive blocks into one sample stream."""
    return np.concatenate([b.with_cp for b in blocks]) if blocks else np.zeros(0, complex)


def demodulate(
    y: np.ndarray,
    tm: TransmitterMatrix,
    mode: str = "zf",
    channel=None,
    noise_cov=None,
) -> np.ndarray:
    """Linear demodulation of one CP-stripped block.

    mode "mf"   : A^H applied after zero-forcing channel equalization.
    mode "zf"   : A^-1 applied after zero-forcing channel equalization.
    mode "mmse" : (R_w + A^H H^H H A)^-1 A^H H^H y, which requires the noise
                  covariance ``noise_cov`` (scalar variance or N x N matrix).

    ``channel`` is a ChannelRealization or None for the identity channel.
    """
    y = np.asarray(y, dtype=complex)
    if y.shape != (tm.N,):
        raise ParameterError(f"received block must have shape ({tm.N},), got {y.shape}")
    mode = mode.lower()
    if mode in ("mf", "zf"):
        if channel is not None:
            from .channel import zf_equalize

            y = zf_equalize(channel, y)
        return (tm.A_herm if mode == "mf" else tm.A_inv) @ y
    if mode == "mmse":
        if noise_cov is None:
            raise ParameterError("MMSE demodulation requires the noise covariance")
        N = tm.N
        R_w = noise_cov * np.eye(N) if np.isscalar(noise_cov) else np.asarray(noise_cov)
        if channel is None:
            HA = tm.A
            Hy = y
        else:
            H_diag = channel.freq_response(N)
            if np.any(~np.isfinite(H_diag)):
                raise EqualizationError("channel frequency response is not finite")
            HA = np.fft.ifft(H_diag[:, None] * np.fft.fft(tm.A, axis=0), axis=0)
            Hy = y
        AH_HH = HA.conj().T
        return np.linalg.solve(R_w + AH_HH @ HA, AH_HH @ Hy)
    raise ParameterError(f"unknown demodulator mode {mode!r}; choose mf, zf, or mmse")
