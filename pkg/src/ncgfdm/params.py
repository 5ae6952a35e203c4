"""Global dimension parameters of the GFDM waveform.

A block carries K subcarriers times M subsymbols, N = K*M samples, plus a
cyclic prefix of n_cp samples.  V is the highest derivative order kept
continuous across block boundaries by the smoothing machinery.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError


@dataclass(frozen=True)
class WaveformParams:
    """Validated waveform dimensions shared by every module.

    Parameters
    ----------
    K : int
        Number of subcarriers (positive).
    M : int
        Number of subsymbols per block (positive).
    n_cp : int
        Cyclic-prefix length in samples, 0 <= n_cp < N.
    beta : float
        Roll-off factor of the prototype filter, in [0, 1].
    V : int
        Highest derivative order enforced continuous (small, typically 0-6).
    n_s : int
        Number of blocks in a stream (positive).
    """

    K: int
    M: int
    n_cp: int = 0
    beta: float = 0.0
    V: int = 0
    n_s: int = 1

    def __post_init__(self):
        if self.K < 1 or self.M < 1:
            raise ParameterError(f"K and M must be positive (got K={self.K}, M={self.M})")
        if not (0 <= self.n_cp < self.N):
            raise ParameterError(f"n_cp must satisfy 0 <= n_cp < N={self.N} (got {self.n_cp})")
        if not (0.0 <= self.beta <= 1.0):
            raise ParameterError(f"beta must lie in [0, 1] (got {self.beta})")
        if self.beta > 0 and self.K < 2:
            raise ParameterError("beta > 0 requires K >= 2 (roll-off band would wrap)")
        if self.V < 0:
            raise ParameterError(f"V must be non-negative (got {self.V})")
        if 2 * self.V + 1 > self.N:
            raise ParameterError(
                f"2V+1 = {2 * self.V + 1} exceeds N = {self.N}; the boundary system "
                "would be ill-posed"
            )
        if self.n_s < 1:
            raise ParameterError(f"n_s must be positive (got {self.n_s})")

    @property
    def N(self) -> int:
        """Block length N = K*M."""
        return self.K * self.M


def signed_bins(N: int) -> np.ndarray:
    """Signed DFT bin frequencies ((l + N//2) mod N) - N//2 for l = 0..N-1.

    All derivative operators use the signed frequency of each bin so that
    differentiation agrees with the band-limited interpolation of the block
    (bins above N/2 count as negative frequencies).
    """
    ell = np.arange(N)
    return ((ell + N // 2) % N) - N // 2


def derivative_factors(N: int, order: int) -> np.ndarray:
    """Per-bin spectral differentiation factors (j*2*pi*l/N)**order, signed l."""
    return (2j * np.pi * signed_bins(N) / N) ** order
