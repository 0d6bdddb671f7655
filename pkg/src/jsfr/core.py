"""Signal containers and the DSP primitives everything else is built on.

All waveforms in this package are treated as one period of a cyclic capture:
FFT-domain operations (Hilbert transform, resampling, dispersion) are exact
on them and there are no edge transients to trim.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass, replace
from fractions import Fraction

import numpy as np
from scipy import signal as sps_signal


@dataclass(frozen=True)
class ComplexSignal:
    """Uniformly sampled complex baseband waveform.

    ``center_offset`` tracks how far the baseband has been moved away from the
    original optical reference frequency (Hz).
    """

    samples: np.ndarray
    sample_rate: float
    center_offset: float = 0.0

    def __post_init__(self):
        if not self.sample_rate > 0:
            raise ValueError(f"sample_rate must be positive, got {self.sample_rate}")
        object.__setattr__(self, "samples", np.asarray(self.samples, dtype=complex))

    def __len__(self):
        return self.samples.size

    @property
    def t(self):
        return np.arange(self.samples.size) / self.sample_rate

    def with_samples(self, samples):
        return replace(self, samples=samples)


@dataclass(frozen=True)
class JonesSignal:
    """X/Y polarization pair forming the Jones vector at every sample."""

    x: ComplexSignal
    y: ComplexSignal

    def __post_init__(self):
        if len(self.x) != len(self.y):
            raise ValueError("x and y must have the same length")
        if self.x.sample_rate != self.y.sample_rate:
            raise ValueError("x and y must share a sample rate")
        if self.x.center_offset != self.y.center_offset:
            raise ValueError("x and y must share a center offset")

    @classmethod
    def from_array(cls, xy, sample_rate, center_offset=0.0):
        xy = np.asarray(xy, dtype=complex)
        return cls(ComplexSignal(xy[0], sample_rate, center_offset),
                   ComplexSignal(xy[1], sample_rate, center_offset))

    @property
    def sample_rate(self):
        return self.x.sample_rate

    @property
    def center_offset(self):
        return self.x.center_offset

    def as_array(self):
        """2×N array, row 0 = X."""
        return np.vstack([self.x.samples, self.y.samples])

    def with_array(self, xy):
        return JonesSignal.from_array(xy, self.sample_rate, self.center_offset)

    def __len__(self):
        return len(self.x)


@dataclass(frozen=True)
class RrcSpec:
    rolloff: float = 0.01
    span: int = 64
    sps: int = 4

    def __post_init__(self):
        if not 0.0 <= self.rolloff <= 1.0:
            raise ValueError(f"rolloff must be in [0, 1], got {self.rolloff}")
        if self.span < 16:
            raise ValueError(f"span must be >= 16 symbols, got {self.span}")
        if int(self.sps) != self.sps or self.sps < 2:
            raise ValueError(f"sps must be an integer >= 2, got {self.sps}")


def db2lin(x):
    return 10.0 ** (np.asarray(x) / 10.0)


def lin2db(x):
    return 10.0 * np.log10(x)


def power(s):
    """Mean power ``mean(|x|^2)`` of a signal or raw array."""
    x = s.samples if isinstance(s, ComplexSignal) else np.asarray(s)
    if x.size == 0:
        raise ValueError("power of an empty signal is undefined")
    return float(np.mean(np.abs(x) ** 2))


def substream(seed, tag, *index):
    """Independent counter-based generator for (seed, stage tag, index...).

    Every stage draws from its own stream, so inserting a new stage never
    shifts the random numbers seen by the others.
    """
    key = [int(seed) & 0xFFFFFFFF, zlib.crc32(tag.encode())] + [int(i) for i in index]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(key)))


def rrc_taps(spec):
    """Unit-energy root-raised-cosine impulse response, ``span*sps + 1`` taps."""
    beta, sps = spec.rolloff, int(spec.sps)
    n = spec.span * sps
    t = (np.arange(n + 1) - n / 2) / sps
    h = np.empty_like(t)
    if beta == 0:
        h = np.sinc(t)
    else:
        with np.errstate(divide="ignore", invalid="ignore"):
            num = np.sin(np.pi * t * (1 - beta)) + 4 * beta * t * np.cos(np.pi * t * (1 + beta))
            den = np.pi * t * (1 - (4 * beta * t) ** 2)
            h = num / den
        h[np.isclose(t, 0.0)] = 1 - beta + 4 * beta / np.pi
        sing = np.isclose(np.abs(t), 1 / (4 * beta))
        h[sing] = beta / np.sqrt(2) * ((1 + 2 / np.pi) * np.sin(np.pi / (4 * beta))
                                       + (1 - 2 / np.pi) * np.cos(np.pi / (4 * beta)))
    return h / np.sqrt(np.sum(h ** 2))


def rrc_filter(s, spec, circular=False):
    """Filter with the RRC pulse; the output is time-aligned with the input.

    ``circular=True`` treats the input as one period of a cyclic waveform.
    """
    h = rrc_taps(spec)
    x = s.samples if isinstance(s, ComplexSignal) else np.asarray(s)
    d = (h.size - 1) // 2
    if circular:
        n = x.size
        hh = np.zeros(n, dtype=float)
        idx = (np.arange(h.size) - d) % n
        np.add.at(hh, idx, h)
        y = np.fft.ifft(np.fft.fft(x) * np.fft.fft(hh))
        if not np.iscomplexobj(x):
            y = y.real
    else:
        y = np.convolve(x, h, mode="full")[d:d + x.size]
    return s.with_samples(y) if isinstance(s, ComplexSignal) else y


def hilbert_phase(x):
    """Discrete Hilbert transform of a real sequence (FFT sign flip).

    DC and, for even lengths, the Nyquist bin are zeroed.
    """
    x = np.asarray(x, dtype=float)
    n = x.size
    if n < 2:
        raise ValueError("hilbert_phase needs at least 2 samples")
    mult = np.zeros(n)
    half = (n + 1) // 2
    mult[1:half] = 1.0
    mult[n - half + 1:] = -1.0
    if n % 2 == 0:
        mult[n // 2] = 0.0
    return np.fft.ifft(np.fft.fft(x) * (-1j * mult)).real


def _rate_ratio(old, new):
    frac = Fraction(new / old).limit_denominator(10_000)
    if not np.isclose(float(frac), new / old, rtol=1e-12, atol=0):
        raise ValueError(f"unsupported rate ratio {new}/{old}")
    return frac


def resample(s, new_rate):
    """Band-limited resampling of a cyclic waveform by a rational ratio."""
    if not new_rate > 0:
        raise ValueError("new_rate must be positive")
    ratio = _rate_ratio(s.sample_rate, new_rate)
    if ratio == 1:
        return s
    n_new = len(s) * ratio
    if n_new.denominator != 1:
        raise ValueError(f"length {len(s)} cannot be resampled by {ratio} to an integer length")
    y = sps_signal.resample(s.samples, int(n_new))
    return ComplexSignal(y, float(new_rate), s.center_offset)


def resample_array(x, factor):
    """FFT-resample a cyclic array (real or complex) by a rational ``factor``."""
    factor = Fraction(factor).limit_denominator(10_000)
    if factor == 1:
        return np.asarray(x)
    n_new = len(x) * factor
    if n_new.denominator != 1:
        raise ValueError(f"length {len(x)} cannot be resampled by {factor}")
    return sps_signal.resample(x, int(n_new))


def frequency_shift(s, df):
    """Move spectral content from ``f`` to ``f - df``."""
    if abs(df) >= s.sample_rate / 2:
        raise ValueError(f"shift {df} Hz aliases at sample rate {s.sample_rate}")
    if df == 0:
        return s
    y = s.samples * np.exp(-2j * np.pi * df * s.t)
    return ComplexSignal(y, s.sample_rate, s.center_offset - df)


def fractional_delay(x, delay):
    """Cyclically delay ``x`` by ``delay`` samples (may be fractional)."""
    x = np.asarray(x)
    if delay == 0:
        return x.copy()
    f = np.fft.fftfreq(x.size)
    ph = np.exp(-2j * np.pi * f * delay)
    if x.size % 2 == 0:
        # keep real inputs real: Nyquist bin gets the real part of the ramp
        ph[x.size // 2] = np.cos(np.pi * delay)
    y = np.fft.ifft(np.fft.fft(x) * ph)
    return y if np.iscomplexobj(x) else y.real


def spectrum_freqs(n, rate):
    return np.fft.fftfreq(n, 1.0 / rate)
