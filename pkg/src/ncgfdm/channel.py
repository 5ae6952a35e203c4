"""AWGN and block-fading multipath Rayleigh channels with ZF equalization.

Each block sees one static channel realization (block fading): the channel
matrix after CP removal is circulant, which is inconsistent with intra-block
time variation, and at 100 Hz Doppler with 15 kHz spacing the block is
quasi-static anyway.  Doppler can optionally correlate taps across blocks
through a first-order Gauss-Markov recursion with coefficient
J0(2*pi*f_D*T_block); the default draws independent blocks.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import j0

from .errors import CpInsufficiencyError, EqualizationError, ParameterError
from .modem import TimeBlock

#: Spectral magnitude below which ZF equalization refuses to divide.
ZF_NULL_THRESHOLD = 1e-6


@dataclass(frozen=True)
class ChannelProfile:
    """Power-delay profile: tap delays in ns, tap powers in dB."""

    name: str
    delays_ns: tuple
    powers_db: tuple
    sample_interval_ns: float
    doppler_hz: float = 0.0

    def __post_init__(self):
        if len(self.delays_ns) != len(self.powers_db):
            raise ParameterError("delays_ns and powers_db must have the same length")
        if any(b > a for a, b in zip(self.delays_ns[1:], self.delays_ns[:-1])):
            raise ParameterError("delays_ns must be sorted ascending")
        if not all(np.isfinite(self.powers_db)):
            raise ParameterError("powers_db must be finite")
        if self.sample_interval_ns <= 0:
            raise ParameterError("sample_interval_ns must be positive")

    @property
    def delay_indices(self) -> np.ndarray:
        """Tap positions rounded to the sample grid."""
        return np.round(np.asarray(self.delays_ns) / self.sample_interval_ns).astype(int)

    @property
    def tap_variances(self) -> np.ndarray:
        """Per-tap variances from the dB profile, normalised to unit total power."""
        p = 10.0 ** (np.asarray(self.powers_db) / 10.0)
        return p / p.sum()


#: 9-path Extended Vehicular A profile (3GPP LTE) on the 9.3 ns sample grid.
EVA_PROFILE = ChannelProfile(
    name="eva",
    delays_ns=(0.0, 30.0, 150.0, 310.0, 370.0, 710.0, 1090.0, 1730.0, 2510.0),
    powers_db=(0.0, -1.5, -1.4, -3.6, -0.6, -9.1, -7.0, -12.0, -16.9),
    sample_interval_ns=9.3,
    doppler_hz=100.0,
)


def scaled_profile(profile: ChannelProfile, sample_interval_ns: float) -> ChannelProfile:
    """Same power-delay shape quantised on a different sample grid."""
    return ChannelProfile(
        name=profile.name,
        delays_ns=profile.delays_ns,
        powers_db=profile.powers_db,
        sample_interval_ns=sample_interval_ns,
        doppler_hz=profile.doppler_hz,
    )


def load_profile(path) -> ChannelProfile:
    """Read a profile from flat key-value text (delays_ns, powers_db lists)."""
    values = {}
    with open(path, "r", encoding="utf-8") as fh:
        for raw in fh:
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ParameterError(f"malformed profile line: {raw.strip()!r}")
            key, val = (s.strip() for s in line.split("=", 1))
            values[key] = val
    known = {"name", "delays_ns", "powers_db", "sample_interval_ns", "doppler_hz"}
    unknown = set(values) - known
    if unknown:
        raise ParameterError(f"unknown profile keys {sorted(unknown)}; valid keys: {sorted(known)}")
    try:
        return ChannelProfile(
            name=values.get("name", "custom"),
            delays_ns=tuple(float(x) for x in values["delays_ns"].split(",")),
            powers_db=tuple(float(x) for x in values["powers_db"].split(",")),
            sample_interval_ns=float(values.get("sample_interval_ns", 9.3)),
            doppler_hz=float(values.get("doppler_hz", 0.0)),
        )
    except KeyError as exc:
        raise ParameterError(f"profile file is missing key {exc}") from exc


@dataclass(frozen=True)
class ChannelRealization:
    """One block's sample-spaced impulse response."""

    taps: np.ndarray
    block_index: int = 0

    def freq_response(self, N: int) -> np.ndarray:
        """Length-N frequency response (DFT of the zero-padded taps)."""
        if self.taps.size > N:
            raise ParameterError(f"{self.taps.size} taps exceed the block length {N}")
        return np.fft.fft(self.taps, n=N)


IDENTITY_CHANNEL = ChannelRealization(taps=np.ones(1, dtype=complex))


def _as_rng(seed) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def block_rng(master_seed: int, block_index: int) -> np.random.Generator:
    """Deterministic per-block generator derived from (master seed, block index)."""
    return np.random.default_rng([int(master_seed), int(block_index)])


def noise_variance(snr_db=None, ebn0_db=None, bits_per_symbol=None, signal_power: float = 1.0) -> float:
    """Complex noise variance for a target SNR or Eb/N0.

    Calibration is against the *nominal* signal power (unit-power
    constellation through unit-norm columns gives power 1.0 per sample), so
    two schemes sharing a seed see byte-identical noise.
    """
    if (snr_db is None) == (ebn0_db is None):
        raise ParameterError("specify exactly one of snr_db and ebn0_db")
    if snr_db is not None:
        return signal_power / 10.0 ** (snr_db / 10.0)
    if not bits_per_symbol:
        raise ParameterError("ebn0_db calibration needs bits_per_symbol")
    return signal_power / (bits_per_symbol * 10.0 ** (ebn0_db / 10.0))


def awgn(
    x: np.ndarray,
    rng,
    snr_db=None,
    ebn0_db=None,
    bits_per_symbol=None,
    signal_power: float = 1.0,
) -> np.ndarray:
    """Add circular complex Gaussian noise at the requested SNR or Eb/N0.

    Passing ``snr_db=np.inf`` (or ``ebn0_db=np.inf``) disables the noise.
    Deterministic for a fixed seed or Generator.
    """
    x = np.asarray(x, dtype=complex)
    target = snr_db if snr_db is not None else ebn0_db
    if target is not None and np.isinf(target):
        return x.copy()
    var = noise_variance(snr_db, ebn0_db, bits_per_symbol, signal_power)
    rng = _as_rng(rng)
    noise = rng.standard_normal(x.shape) + 1j * rng.standard_normal(x.shape)
    return x + np.sqrt(var / 2.0) * noise


def sample_channel(
    profile: ChannelProfile,
    rng,
    block_index: int = 0,
    n_cp: int | None = None,
    previous: ChannelRealization | None = None,
    block_duration_s: float | None = None,
) -> ChannelRealization:
    """Draw one block's Rayleigh tap realization from the profile.

    Taps are independent circular complex Gaussians with the profile's
    normalised variances, placed at delays rounded to the sample grid
    (coinciding delays accumulate).  With ``previous`` and
    ``block_duration_s`` the taps follow a Gauss-Markov recursion whose
    coefficient is the Jakes autocorrelation J0(2*pi*f_D*T).
    """
    rng = _as_rng(rng)
    idx = profile.delay_indices
    if n_cp is not None and idx.max() >= n_cp:
        raise CpInsufficiencyError(
            f"maximum delay index {idx.max()} is not covered by n_cp={n_cp}"
        )
    std = np.sqrt(profile.tap_variances / 2.0)
    gains = std * (rng.standard_normal(len(std)) + 1j * rng.standard_normal(len(std)))
    taps = np.zeros(idx.max() + 1, dtype=complex)
    np.add.at(taps, idx, gains)
    if previous is not None:
        if block_duration_s is None:
            raise ParameterError("Gauss-Markov correlation needs block_duration_s")
        rho = float(j0(2.0 * np.pi * profile.doppler_hz * block_duration_s))
        prev = np.zeros_like(taps)
        prev[:previous.taps.size] = previous.taps
        taps = rho * prev + np.sqrt(max(0.0, 1.0 - rho * rho)) * taps
    return ChannelRealization(taps=taps, block_index=block_index)


def apply_channel(realization: ChannelRealization, block: TimeBlock) -> np.ndarray:
    """Linear convolution of the CP-inserted block with the channel taps.

    Returns n_cp + N + (taps-1) samples; after CP removal the body equals the
    circular convolution of the body with the taps whenever the delay spread
    fits inside the prefix.
    """
    return np.convolve(block.with_cp, realization.taps)


def zf_equalize(realization: ChannelRealization, y_body: np.ndarray) -> np.ndarray:
    """Zero-forcing channel equalization of a CP-stripped body, in frequency.

    Refuses to equalize across spectral nulls: bins with |H| below
    ``ZF_NULL_THRESHOLD`` raise EqualizationError naming the offending bins
    instead of silently amplifying noise.
    """
    y_body = np.asarray(y_body, dtype=complex)
    H = realization.freq_response(y_body.size)
    bad = np.flatnonzero(np.abs(H) < ZF_NULL_THRESHOLD)
    if bad.size:
        raise EqualizationError(
            f"spectral nulls below {ZF_NULL_THRESHOLD:g} at bins {bad[:8].tolist()}"
            + ("..." if bad.size > 8 else "")
        )
    return np.fft.ifft(np.fft.fft(y_body) / H)
