"""Prototype filter and the dense GFDM transmitter matrix.

The prototype is a frequency-domain raised-cosine: an amplitude taper over
the M*(1+beta) DFT bins of one subcarrier band.  Subcarrier k occupies bins
[k*M, (k+1)*M), so the taper is centred on bin offset (M-1)/2 and at beta=0
degenerates to a flat response over exactly M bins (a periodic-sinc pulse in
time, carrying a half-bin phase ramp when the centre falls between bins).
Bands of the K subcarriers tile the whole N-bin grid, which makes the
transmitter matrix unitary at beta=0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import IllConditionedFilterError, ParameterError
from .params import WaveformParams

#: Condition-number estimate above which the transmitter matrix is rejected.
CONDITION_LIMIT = 1e12


@dataclass(frozen=True)
class PrototypeFilter:
    """Unit-energy prototype pulse of length N = K*M.

    ``samples`` is complex; the magnitude profile is even-symmetric and the
    phase is the linear ramp produced by the half-bin band centre.
    """

    samples: np.ndarray
    beta: float
    K: int
    M: int

    @property
    def N(self) -> int:
        return self.samples.size

    @property
    def energy(self) -> float:
        return float(np.sum(np.abs(self.samples) ** 2))


def rc_band_taper(K: int, M: int, beta: float) -> np.ndarray:
    """Raised-cosine amplitude response of the subcarrier-0 band on the N-bin grid.

    Flat over the inner (1-beta)*M bins, cosine roll-off over the next
    beta*M/2 bins on each side, zero elsewhere.  The response obeys the
    Nyquist complement property: shifted copies at multiples of M sum to a
    constant, which keeps the aliased spectrum of the pulse flat for every
    roll-off.
    """
    N = K * M
    ell = np.arange(N)
    centre = (M - 1) / 2.0
    # circular distance from the band centre, in units of the band width M
    dist = ((ell - centre + N / 2) % N) - N / 2
    x = np.abs(dist) / M
    H = np.zeros(N)
    H[x <= (1 - beta) / 2] = 1.0
    if beta > 0:
        roll = (x > (1 - beta) / 2) & (x <= (1 + beta) / 2)
        H[roll] = 0.5 * (1 + np.cos(np.pi / beta * (x[roll] - (1 - beta) / 2)))
    return H


def build_prototype_rc(params: WaveformParams) -> PrototypeFilter:
    """Construct the unit-energy raised-cosine prototype pulse.

    The pulse is the inverse DFT of the band taper, normalised to unit
    energy after construction.  At beta=0 it is the periodic-sinc (Dirichlet)
    pulse whose spectrum is flat over exactly M bins.
    """
    if not (0.0 <= params.beta <= 1.0):
        raise ParameterError(f"beta outside [0, 1]: {params.beta}")
    taper = rc_band_taper(params.K, params.M, params.beta)
    g = np.fft.ifft(taper.astype(complex))
    g /= np.linalg.norm(g)
    return PrototypeFilter(samples=g, beta=params.beta, K=params.K, M=params.M)


def shift_filter(g: PrototypeFilter, k: int, m: int) -> np.ndarray:
    """Time/frequency shift of the prototype for subcarrier k, subsymbol m.

    output[n] = g((n - m*K) mod N) * exp(+j*2*pi*k*n/K).  The positive
    modulation sign places subcarrier k on bins [k*M, (k+1)*M), matching the
    band layout of the prototype.
    """
    if not (0 <= k < g.K):
        raise ParameterError(f"subcarrier index k={k} outside [0, {g.K})")
    if not (0 <= m < g.M):
        raise ParameterError(f"subsymbol index m={m} outside [0, {g.M})")
    N = g.N
    n = np.arange(N)
    return np.roll(g.samples, m * g.K) * np.exp(2j * np.pi * k * n / g.K)


@dataclass(frozen=True)
class TransmitterMatrix:
    """Dense N x N modulation matrix with cached inverse and conjugate transpose.

    Column k + m*K holds the shifted pulse for subcarrier k, subsymbol m.
    """

    A: np.ndarray
    A_inv: np.ndarray
    A_herm: np.ndarray
    cond: float

    @property
    def N(self) -> int:
        return self.A.shape[0]


def build_transmitter_matrix(g: PrototypeFilter, params: WaveformParams) -> TransmitterMatrix:
    """Assemble A column by column and invert it.

    Columns are ordered subcarrier-major within each subsymbol:
    g_{0,0}, ..., g_{K-1,0}, g_{0,1}, ..., g_{K-1,M-1}.  A 1-norm condition
    estimate above ``CONDITION_LIMIT`` raises IllConditionedFilterError:
    roll-offs that destroy invertibility must fail loudly.
    """
    N = params.N
    n = np.arange(N)
    A = np.empty((N, N), dtype=complex)
    phase = np.exp(2j * np.pi * np.outer(n, np.arange(params.K)) / params.K)
    for m in range(params.M):
        shifted = np.roll(g.samples, m * params.K)
        A[:, m * params.K:(m + 1) * params.K] = shifted[:, None] * phase
    A_inv = np.linalg.inv(A)
    cond = float(np.linalg.norm(A, 1) * np.linalg.norm(A_inv, 1))
    if not np.isfinite(cond) or cond > CONDITION_LIMIT:
        raise IllConditionedFilterError(
            f"transmitter matrix condition estimate {cond:.3e} exceeds {CONDITION_LIMIT:.0e} "
            f"(beta={params.beta})"
        )
    return TransmitterMatrix(A=A, A_inv=A_inv, A_herm=A.conj().T, cond=cond)
