"""Transmitter: bits -> Gray QAM frame -> RRC-shaped PDM waveform -> edge carrier.

Gray map (per quadrature axis, MSB first, ``m = log2(M)/2`` bits per axis)::

    QPSK   axis bits  0 -> -1, 1 -> +1
    16-QAM axis bits 00 -> -3, 01 -> -1, 11 -> +1, 10 -> +3
    64-QAM axis bits follow the reflected binary code over -7..+7

The first ``m`` bits of a symbol drive I, the next ``m`` drive Q, and the
constellation is scaled to unit average power.  For QPSK this gives
00 -> (-1-1j)/sqrt2, 01 -> (-1+1j)/sqrt2, 11 -> (1+1j)/sqrt2, 10 -> (1-1j)/sqrt2.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .core import ComplexSignal, JonesSignal, RrcSpec, power, rrc_filter, substream

SUPPORTED_QAM = (4, 16, 64)


@dataclass(frozen=True)
class FrameSpec:
    qam_order: int = 16
    train_len: int = 512
    payload_len: int = 8192
    pilot_ratio: float = 0.004
    baud: float = 56e9
    n_pilots: int | None = None  # overrides round(pilot_ratio * payload_len)

    @property
    def frame_len(self):
        return self.train_len + self.payload_len

    @property
    def pilot_count(self):
        if self.n_pilots is not None:
            return int(self.n_pilots)
        return int(round(self.pilot_ratio * self.payload_len))

    @property
    def bits_per_symbol(self):
        return int(np.log2(self.qam_order))


@dataclass(frozen=True)
class CarrierSpec:
    """Edge carrier. ``offset=None`` puts it just below the signal band."""

    cspr_db: float = 6.0
    offset: float | None = None
    xi: float = 0.0
    guard: float = 0.01  # fraction of the baud rate


@dataclass
class Frame:
    """One transmitted frame: bits and symbols are ``(n_pol, ...)`` arrays."""

    spec: FrameSpec
    bits: np.ndarray
    symbols: np.ndarray
    train_idx: np.ndarray
    pilot_idx: np.ndarray
    data_idx: np.ndarray = field(repr=False)

    @property
    def training(self):
        return self.symbols[:, self.train_idx]


def _gray(n_bits):
    g = np.arange(2 ** n_bits)
    return g ^ (g >> 1)


@lru_cache(maxsize=None)
def pam_levels(n_bits):
    """Amplitude for each axis bit pattern (index = pattern as integer)."""
    n = 2 ** n_bits
    levels = np.empty(n)
    levels[_gray(n_bits)] = np.arange(n) * 2 - (n - 1)
    return levels


@lru_cache(maxsize=None)
def constellation(order):
    """Unit-power constellation indexed by the symbol's bit pattern."""
    if order not in SUPPORTED_QAM:
        raise ValueError(f"unsupported QAM order {order}; use one of {SUPPORTED_QAM}")
    m = int(np.log2(order)) // 2
    lv = pam_levels(m)
    idx = np.arange(order)
    pts = lv[idx >> m] + 1j * lv[idx & (2 ** m - 1)]
    return pts / np.sqrt(np.mean(np.abs(pts) ** 2))


def map_bits(bits, order):
    """Map a bit array (last axis multiple of log2 M) onto Gray QAM symbols."""
    k = int(np.log2(order))
    bits = np.asarray(bits, dtype=np.int64)
    groups = bits.reshape(*bits.shape[:-1], -1, k)
    weights = 1 << np.arange(k - 1, -1, -1)
    return constellation(order)[groups @ weights]


def demap_symbols(symbols, order):
    """Hard-decision symbols -> bits, by independent slicing of I and Q."""
    k = int(np.log2(order))
    m = k // 2
    n = 2 ** m
    # undo unit-power normalisation: axis levels are odd integers before scaling
    symbols = np.asarray(symbols) * np.sqrt(2 * (n ** 2 - 1) / 3)

    def axis_bits(v):
        level_idx = np.clip(np.round((v + n - 1) / 2), 0, n - 1).astype(np.int64)
        pattern = _gray(m)[level_idx]
        return (pattern[..., None] >> np.arange(m - 1, -1, -1)) & 1

    out = np.concatenate([axis_bits(symbols.real), axis_bits(symbols.imag)], axis=-1)
    return out.reshape(*symbols.shape[:-1], -1).astype(np.int8)


def decide(symbols, order):
    """Nearest constellation point."""
    return map_bits(demap_symbols(symbols, order), order)


def pilot_positions(spec):
    """Evenly spaced pilot positions inside the payload, as frame indices."""
    n = spec.pilot_count
    if n <= 0:
        return np.zeros(0, dtype=int)
    step = spec.payload_len / n
    return spec.train_len + (np.floor(np.arange(n) * step + step / 2)).astype(int)


def generate_frame(spec, seed, n_pol=2):
    """Random Gray-mapped frame with a QPSK training head and pilot symbols.

    Training and pilot symbols are QPSK points drawn from their own seeded
    substreams, so they are identical for a given seed regardless of QAM order.
    """
    if spec.qam_order not in SUPPORTED_QAM:
        raise ValueError(f"unsupported QAM order {spec.qam_order}")
    k = spec.bits_per_symbol
    n_sym = spec.frame_len
    bits = substream(seed, "tx.bits").integers(0, 2, size=(n_pol, n_sym * k), dtype=np.int8)
    symbols = map_bits(bits, spec.qam_order)

    train_idx = np.arange(spec.train_len)
    pilot_idx = pilot_positions(spec)
    qpsk = constellation(4)
    symbols[:, train_idx] = qpsk[substream(seed, "tx.train").integers(0, 4, (n_pol, spec.train_len))]
    pilot_vals = qpsk[substream(seed, "tx.pilot").integers(0, 4, (n_pol, pilot_idx.size))]
    # pilots ride on the outer QPSK ring of the QAM grid for a better phase reference
    outer = np.max(np.abs(constellation(spec.qam_order).real))
    symbols[:, pilot_idx] = pilot_vals * np.sqrt(2) * outer

    # keep bits consistent with the symbols actually sent; only data positions are scored
    bits = demap_symbols(symbols, spec.qam_order)
    mask = np.ones(n_sym, dtype=bool)
    mask[train_idx] = False
    mask[pilot_idx] = False
    return Frame(spec, bits, symbols, train_idx, pilot_idx, np.flatnonzero(mask))


def modulate(symbols, spec, rrc):
    """Upsample and RRC-shape each polarization; returns a cyclic JonesSignal.

    A single row is treated as an X-only (single-polarization) signal.
    """
    symbols = np.atleast_2d(np.asarray(symbols, dtype=complex))
    if symbols.shape[0] == 1:
        symbols = np.vstack([symbols, np.zeros_like(symbols)])
    sps = int(rrc.sps)
    up = np.zeros((2, symbols.shape[1] * sps), dtype=complex)
    up[:, ::sps] = symbols
    shaped = np.vstack([rrc_filter(row, rrc, circular=True) for row in up])
    # unit-energy taps at sps samples/symbol -> scale to symbol power
    shaped *= np.sqrt(sps)
    return JonesSignal.from_array(shaped, spec.baud * sps)


def default_carrier_offset(baud, rolloff, guard=0.01):
    return -(baud * (1 + rolloff) / 2 + guard * baud)


def insert_carrier(sig, carrier, baud=56e9, rolloff=0.01, single_pol=False):
    """Add the edge carrier at 45 degrees between X and Y, rotating the signals by xi.

    With ``single_pol=True`` the carrier rides on X only and the CSPR is taken
    against the X signal power (the single-polarization reference link).
    The tone is snapped to the nearest FFT bin of the cyclic capture so it is
    exactly periodic, and its amplitude is set from the measured signal power
    so the carrier-to-signal power ratio is exact.
    """
    fs = sig.sample_rate
    n = len(sig)
    f = carrier.offset if carrier.offset is not None else default_carrier_offset(
        baud, rolloff, carrier.guard)
    if abs(f) >= fs / 2:
        raise ValueError(f"carrier offset {f} Hz aliases at sample rate {fs}")
    f_bin = np.round(f * n / fs) * fs / n

    s = sig.as_array()
    if single_pol:
        g = s.copy()
        p_sig = power(s[0])
    else:
        c, sn = np.cos(carrier.xi), np.sin(carrier.xi)
        g = np.vstack([c * s[0] - sn * s[1], sn * s[0] + c * s[1]])
        p_sig = 0.5 * (power(s[0]) + power(s[1]))
    if p_sig == 0:
        raise ValueError("cannot set a CSPR on a zero-power signal")
    amp = np.sqrt(10 ** (carrier.cspr_db / 10) * p_sig)
    tone = amp * np.exp(2j * np.pi * f_bin * np.arange(n) / fs)
    if single_pol:
        g[0] += tone
        return sig.with_array(g)
    return sig.with_array(g + tone)


def carrier_frequency(sig, carrier, baud=56e9, rolloff=0.01):
    """The bin-snapped tone frequency that :func:`insert_carrier` uses."""
    n, fs = len(sig), sig.sample_rate
    f = carrier.offset if carrier.offset is not None else default_carrier_offset(
        baud, rolloff, carrier.guard)
    return float(np.round(f * n / fs) * fs / n)


def measure_cspr(sig, f_carrier):
    """CSPR of a Jones waveform from its spectrum: tone bin vs everything else (dB)."""
    xy = sig.as_array()
    n = xy.shape[1]
    k = int(np.round(f_carrier * n / sig.sample_rate)) % n
    spec = np.abs(np.fft.fft(xy, axis=1)) ** 2 / n ** 2
    p_tone = spec[:, k].sum()
    p_rest = spec.sum() - p_tone
    return 10 * np.log10(p_tone / p_rest)


def compute_net_rate(spec, fec_overhead=0.14, n_pol=2):
    """Net bit rate in Gb/s after FEC and frame (training + pilot) overhead."""
    if fec_overhead < 0:
        raise ValueError("fec_overhead must be >= 0")
    n_pilot = spec.pilot_count
    data = spec.payload_len - n_pilot
    total = spec.train_len + n_pilot + data
    gross = spec.baud * spec.bits_per_symbol * n_pol
    return gross / (1 + fec_overhead) * data / total / 1e9
