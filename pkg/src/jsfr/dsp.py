"""Receiver DSP after per-branch field recovery.

Order of the chain: carrier removal and resampling to 2 SPS, 4th-power
frequency-offset estimation, CD compensation, matched filter, training-based
synchronization, N x 2 RLS MIMO, pilot-aided blind phase search, decision.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.special import erfcinv

from . import txchain
from .channel import cd_transfer
from .core import ComplexSignal, RrcSpec, fractional_delay, frequency_shift, resample, rrc_filter


class SyncError(RuntimeError):
    """Training sequence could not be located unambiguously."""


class MimoMode(str, enum.Enum):
    TRAIN_THEN_FREEZE = "freeze"
    TRAIN_THEN_DD = "dd"


@dataclass(frozen=True)
class MimoSpec:
    n_inputs: int = 4
    taps: int = 51
    train_len: int = 512
    rls_lambda: float = 0.999
    mode: MimoMode = MimoMode.TRAIN_THEN_FREEZE
    delta: float = 0.01

    def __post_init__(self):
        if self.taps < 1 or self.taps % 2 == 0:
            raise ValueError("taps must be odd and positive")
        if not 0 < self.rls_lambda <= 1:
            raise ValueError("rls_lambda must be in (0, 1]")


@dataclass(frozen=True)
class CpeSpec:
    pilot_ratio: float = 0.004
    bps_angles: int = 32
    bps_window: int = 64

    def __post_init__(self):
        if not 0 < self.pilot_ratio <= 0.05:
            raise ValueError("pilot_ratio must be in (0, 0.05]")


@dataclass
class Metrics:
    ber: float
    evm: float
    q_db: float
    per_branch_cspr: list = field(default_factory=list)
    converged: bool = True
    errors: int = 0
    bits: int = 0
    note: str = ""

    def __post_init__(self):
        if not 0 <= self.ber <= 1:
            raise ValueError("ber must lie in [0, 1]")


@dataclass
class SyncResult:
    offset: int
    ratio_db: float


@dataclass
class MimoResult:
    streams: np.ndarray  # (n_out, n_symbols)
    weights: np.ndarray  # (n_inputs * taps, n_out)
    train_mse: np.ndarray  # a-priori |e|^2 per training symbol, summed over outputs
    converged: bool


# -- front of the chain ------------------------------------------------------

def remove_tone(sig, f_tone):
    """Subtract the (bin-centred) tone at ``f_tone`` from a cyclic waveform."""
    n = len(sig)
    ph = np.exp(2j * np.pi * f_tone * np.arange(n) / sig.sample_rate)
    amp = np.vdot(ph, sig.samples) / n
    return sig.with_samples(sig.samples - amp * ph)


def estimate_freq_offset(fields, max_offset=None, min_ratio_db=12.0):
    """4th-power frequency-offset estimate (Hz); resolution rate / (4 N).

    ``fields`` is one ComplexSignal or several (their 4th-power spectra are
    summed, so a branch whose tone is cancelled by polarization mixing does
    not mislead the estimate).  The search is limited to +-``max_offset``
    (default rate / 16) and a peak less than ``min_ratio_db`` above the
    median spectral level is treated as "no measurable offset" (returns 0).
    """
    fields = [fields] if isinstance(fields, ComplexSignal) else list(fields)
    rate = fields[0].sample_rate
    n = len(fields[0])
    spec = sum(np.abs(np.fft.fft(f.samples ** 4)) ** 2 for f in fields)
    f = np.fft.fftfreq(n, 1.0 / rate) / 4
    lim = rate / 16 if max_offset is None else max_offset
    spec = np.where(np.abs(f) <= lim, spec, 0.0)
    k = int(np.argmax(spec))
    if 10 * np.log10(spec[k] / np.median(spec[spec > 0])) < min_ratio_db:
        return 0.0
    return float(f[k])


def correct_freq_offset(field, df):
    return frequency_shift(field, df) if df else field


def cd_compensate(field, fiber_km, beta2):
    """Inverse of :func:`jsfr.channel.apply_cd` (all-pass, exact)."""
    if fiber_km == 0:
        return field
    h = cd_transfer(len(field), field.sample_rate, fiber_km, beta2, sign=-1)
    return field.with_samples(np.fft.ifft(np.fft.fft(field.samples) * h))


def matched_filter(field, rolloff=0.01, span=64, sps=2):
    return rrc_filter(field, RrcSpec(rolloff, span, sps), circular=True)


def to_symbol_rate_grid(field, baud, sps=2):
    return resample(field, baud * sps)


# -- synchronization ---------------------------------------------------------

def training_waveform(symbols, sps=2, length=None):
    """Zero-stuffed training symbols at ``sps`` samples per symbol."""
    symbols = np.atleast_2d(symbols)
    n = symbols.shape[1] * sps if length is None else length
    w = np.zeros((symbols.shape[0], n), dtype=complex)
    w[:, : symbols.shape[1] * sps: sps] = symbols
    return w


def synchronize(field, training_waveform, guard=2, min_ratio_db=3.0):
    """Locate the training head by cyclic cross-correlation.

    ``field`` may be one waveform or a stack (one per MIMO input) and
    ``training_waveform`` one reference or a stack (one per polarization);
    correlation energy is summed over all pairs so any polarization mix works.
    The ratio is between the main peak and the largest value outside
    ``guard`` samples of it (power, dB).
    """
    x = np.atleast_2d(np.asarray(field.samples if isinstance(field, ComplexSignal) else field))
    refs = np.atleast_2d(np.asarray(training_waveform))
    n = x.shape[1]
    if refs.shape[1] < n:
        refs = np.hstack([refs, np.zeros((refs.shape[0], n - refs.shape[1]))])
    elif refs.shape[1] > n:
        raise ValueError("training waveform longer than the capture")
    fx = np.fft.fft(x, axis=1)
    fr = np.conj(np.fft.fft(refs, axis=1))
    corr = np.fft.ifft(fx[:, None, :] * fr[None, :, :], axis=2)
    metric = np.sum(np.abs(corr) ** 2, axis=(0, 1))
    peak = int(np.argmax(metric))
    masked = metric.copy()
    masked[(peak + np.arange(-guard, guard + 1)) % n] = 0
    ratio_db = 10 * np.log10(metric[peak] / max(masked.max(), 1e-300))
    if ratio_db < min_ratio_db:
        raise SyncError(f"training peak ambiguous ({ratio_db:.2f} dB)")
    return SyncResult(peak, float(ratio_db))


# -- MIMO --------------------------------------------------------------------

def _regressors(inputs, taps, n_sym, sps=2, offset=0):
    c = (taps - 1) // 2
    blocks = []
    for u in inputs:
        u = np.roll(np.asarray(u), -offset)
        pad = np.concatenate([u[u.size - c:], u, u[: taps]])
        win = sliding_window_view(pad, taps)[::sps][:n_sym]
        blocks.append(win)
    return np.concatenate(blocks, axis=1)


def _normalise(inputs):
    return [np.asarray(u) / np.sqrt(np.mean(np.abs(u) ** 2)) for u in inputs]


def mimo_equalize(inputs, ref_symbols, spec, offset=0, qam_order=16, known=None, sps=2):
    """Fractionally spaced n_inputs x n_out FFE adapted by RLS.

    ``inputs`` are 2-SPS waveforms with symbol 0 at sample ``offset``;
    ``ref_symbols`` holds the transmitted frame, one row per output, of which
    the first ``spec.train_len`` symbols train the filter.  ``known`` (indices)
    marks further symbols whose reference may be used in DD mode (pilots).
    """
    inputs = list(inputs)
    if len(inputs) != spec.n_inputs:
        raise ValueError(f"expected {spec.n_inputs} inputs, got {len(inputs)}")
    ref = np.atleast_2d(ref_symbols)
    n_out, n_sym = ref.shape
    if n_sym < spec.train_len:
        raise ValueError("reference does not cover the training sequence")
    x = _regressors(_normalise(inputs), spec.taps, n_sym, sps, offset)
    n = x.shape[1]
    lam = spec.rls_lambda
    p = np.eye(n, dtype=complex) / spec.delta
    w = np.zeros((n, n_out), dtype=complex)
    mse = np.empty(spec.train_len)

    def step(xk, d):
        nonlocal p, w
        pz = p @ xk.conj()
        g = pz / (lam + xk @ pz)
        e = d - xk @ w
        w += np.outer(g, e)
        p -= np.outer(g, pz.conj())
        p /= lam
        p = 0.5 * (p + p.conj().T)  # keep P Hermitian; round-off otherwise drifts it in long DD runs
        return e

    for k in range(spec.train_len):
        mse[k] = np.sum(np.abs(step(x[k], ref[:, k])) ** 2)

    mode = MimoMode(spec.mode)
    if mode is MimoMode.TRAIN_THEN_FREEZE:
        y = x @ w
    else:
        y = np.empty((n_sym, n_out), dtype=complex)
        y[: spec.train_len] = x[: spec.train_len] @ w
        known_set = np.zeros(n_sym, dtype=bool)
        if known is not None:
            known_set[np.asarray(known)] = True
        for k in range(spec.train_len, n_sym):
            yk = x[k] @ w
            y[k] = yk
            if not np.all(np.isfinite(yk)):  # diverged: leave the rest as NaN for the caller
                y[k:] = np.nan
                break
            d = ref[:, k] if known_set[k] else txchain.decide(yk, qam_order)
            step(x[k], d)
    return MimoResult(y.T, w, mse, _converged(mse))


def _converged(mse, window=100, tol=1.5):
    """Training error must have levelled off (not risen) over the last ``window``
    symbols, and must end below the reference power."""
    if mse.size < window or not np.all(np.isfinite(mse)):
        return bool(np.all(np.isfinite(mse)))
    tail = mse[-window:]
    early, late = tail[: window // 2].mean(), tail[window // 2:].mean()
    return bool(late <= tol * early and late < 1.0)


# -- carrier phase -----------------------------------------------------------

def _moving_sum(x, window, axis=-1):
    k = np.ones(window)
    return np.apply_along_axis(lambda r: np.convolve(r, k, mode="same"), axis, x)


def carrier_phase_estimate(stream, pilot_idx, pilot_symbols, spec=CpeSpec(), qam_order=16):
    """Pilot-aided coarse phase followed by blind phase search.

    Pilot phases are unwrapped and linearly interpolated; BPS then refines
    within +-pi/4, and each stretch between pilots is snapped to the quadrant
    that makes its pilot residual closest to zero, so cycle slips cannot
    survive past the next pilot.
    """
    y = np.asarray(stream, dtype=complex)
    idx = np.asarray(pilot_idx)
    n = y.size
    if idx.size:
        ph_p = np.unwrap(np.angle(y[idx] * np.conj(pilot_symbols)))
        coarse = np.interp(np.arange(n), idx, ph_p)
    else:
        coarse = np.zeros(n)
    r1 = y * np.exp(-1j * coarse)

    b = spec.bps_angles
    test = (np.arange(b) / b - 0.5) * (np.pi / 2)
    rot = r1[None, :] * np.exp(1j * test)[:, None]
    ref = txchain.decide(rot, qam_order)
    if idx.size:
        # known symbols score against their true value, not the nearest point
        ref[:, idx] = np.asarray(pilot_symbols)[None, :]
    dist = np.abs(rot - ref) ** 2
    score = _moving_sum(dist, spec.bps_window, axis=1)
    best = test[np.argmin(score, axis=0)]
    fine = np.unwrap(4 * best) / 4

    if idx.size:
        resid = np.angle(r1[idx] * np.exp(1j * fine[idx]) * np.conj(pilot_symbols))
        quad = np.round(resid / (np.pi / 2))
        seg = np.clip(np.searchsorted(idx, np.arange(n), side="right") - 1, 0, idx.size - 1)
        fine = fine - quad[seg] * (np.pi / 2)
    return r1 * np.exp(1j * fine)


# -- metrics -----------------------------------------------------------------

def q_from_ber(ber):
    if ber <= 0:
        return math.inf
    if ber >= 0.5:
        return -math.inf
    return float(20 * np.log10(np.sqrt(2) * erfcinv(2 * ber)))


def compute_metrics(decided_bits, tx_bits, rx_syms=None, tx_syms=None, per_branch_cspr=(),
                    converged=True, note=""):
    """BER over the given (data-only) bits; EVM (dB) over the given symbols."""
    db, tb = np.asarray(decided_bits).ravel(), np.asarray(tx_bits).ravel()
    if db.shape != tb.shape:
        raise ValueError("bit streams differ in length")
    if db.size == 0:
        raise ValueError("no bits to count")
    errors = int(np.count_nonzero(db != tb))
    ber = errors / db.size
    evm = math.nan
    if rx_syms is not None:
        rs, ts = np.asarray(rx_syms).ravel(), np.asarray(tx_syms).ravel()
        if rs.shape != ts.shape:
            raise ValueError("symbol streams differ in length")
        evm = float(10 * np.log10(np.mean(np.abs(rs - ts) ** 2) / np.mean(np.abs(ts) ** 2)))
    return Metrics(ber, evm, q_from_ber(ber), list(per_branch_cspr), bool(converged),
                   errors, int(db.size), note)


# -- branch delay calibration ------------------------------------------------

def _xcorr_delay(x, probe, upsample=32, min_ratio_db=3.0, guard=2):
    n = x.size
    cross = np.fft.fft(x - np.mean(x)) * np.conj(np.fft.fft(probe - np.mean(probe)))
    # zero-pad the cross spectrum for a finely interpolated correlation
    m = n * upsample
    padded = np.zeros(m, dtype=complex)
    h = n // 2
    padded[:h] = cross[:h]
    padded[m - (n - h):] = cross[h:]
    if n % 2 == 0:
        padded[h] = cross[h] / 2
        padded[m - h] = cross[h] / 2
    c = np.abs(np.fft.ifft(padded))
    k = int(np.argmax(c))
    masked = c.copy()
    masked[(k + np.arange(-guard * upsample, guard * upsample + 1)) % m] = 0
    if c[k] == 0 or 20 * np.log10(c[k] / max(masked.max(), 1e-300)) < min_ratio_db:
        raise ValueError("correlation peak is ambiguous")
    # parabolic refinement on the upsampled grid
    y0, y1, y2 = c[(k - 1) % m], c[k], c[(k + 1) % m]
    den = y0 - 2 * y1 + y2
    frac = 0.5 * (y0 - y2) / den if den != 0 else 0.0
    d = (k + frac) / upsample
    return d - n if d > n / 2 else d


def calibrate_branch_delay(branches, probe_waveform):
    """Delay (samples) of each branch relative to the probe.

    ``branches`` is a :class:`~jsfr.frontend.BranchSet` (its currents, else
    its fields) or a mapping label -> waveform.
    """
    if hasattr(branches, "currents"):
        src = branches.currents or {k: v.samples for k, v in branches.fields.items()}
    else:
        src = branches
    probe = np.asarray(probe_waveform)
    return {lab: float(_xcorr_delay(np.asarray(x), probe)) for lab, x in src.items()}


def apply_branch_delays(waveforms, delays):
    """Undo measured delays: returns label -> re-aligned waveform."""
    return {lab: fractional_delay(np.asarray(x), -delays.get(lab, 0.0)) for lab, x in waveforms.items()}
