"""Single-polarization field recovery and branch CSPR geometry.

CSPR values from the closed forms are multipliers of the transmit CSPR: a
branch value of 1.5 means that branch sees 1.5x the launched carrier-to-signal
ratio, so with the launch set to C_req it is recoverable iff the value >= 1.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .core import ComplexSignal, frequency_shift, hilbert_phase, resample_array
from .frontend import BRANCH_WEIGHTS, COUPLER_A, COUPLER_B, Scheme

CSPR_CAP_DB = 60.0


class GrKind(str, enum.Enum):
    KKR = "kkr"


class SelectMode(str, enum.Enum):
    TOP2 = "top2"
    ALL = "all"


@dataclass(frozen=True)
class GrSpec:
    kind: GrKind = GrKind.KKR
    c_req_db: float = 6.0
    working_sps: int = 8

    def __post_init__(self):
        if self.working_sps < 4:
            raise ValueError("working_sps must be >= 4")


@dataclass(frozen=True)
class CsprProfile:
    scheme: Scheme
    labels: tuple
    values: tuple
    c_req_db: float = 6.0

    def as_dict(self):
        return dict(zip(self.labels, self.values))


def cspr_2x2(alpha, theta):
    """Multipliers for branches (X, Y, X+Y, X-Y)."""
    s = 2 * np.cos(alpha) * np.sin(alpha) * np.cos(theta)
    c = np.cos(alpha) ** 2 * np.cos(theta) ** 2
    return np.array([1 - s, 1 + s, 2 * c, 2 - 2 * c])


def cspr_hybrid(alpha, theta):
    """Multipliers for branches (X+Y, X-Y, X+jY, X-jY)."""
    c = np.cos(alpha) ** 2 * np.cos(theta) ** 2
    q = 2 * np.cos(alpha) ** 2 * np.cos(theta) * np.sin(theta)
    return np.array([2 * c, 2 - 2 * c, 1 + q, 1 - q])


def cspr_3x3(alpha, theta):
    """Multipliers for the 3x3 coupler outputs (aX+bY, bX+bY, bX+aY)."""
    z = np.cos(alpha) ** 2 * np.exp(2j * np.asarray(theta)) - np.sin(alpha) ** 2
    ab = COUPLER_A * np.conj(COUPLER_B)
    return np.array([1 + 3 * np.real(ab * z),
                     2 * np.cos(alpha) ** 2 * np.cos(theta) ** 2,
                     1 + 3 * np.real(np.conj(ab) * z)])


_CLOSED_FORM = {Scheme.COUPLER_2X2: cspr_2x2, Scheme.HYBRID_90: cspr_hybrid,
                Scheme.COUPLER_3X3: cspr_3x3}

# branch left out when a 2x2 / hybrid receiver is built with three detectors
DROPPED_BRANCH = {Scheme.COUPLER_2X2: "X-Y", Scheme.HYBRID_90: "X-jY"}


def cspr_pbs(alpha, theta):
    """Multipliers for the plain PBS outputs (X, Y)."""
    return cspr_2x2(alpha, theta)[:2]


def cspr_values(scheme, alpha, theta, detectors=None):
    """Closed-form multipliers for ``scheme``; ``detectors=3`` drops the
    branch a 3-detector 2x2/hybrid front-end does not see."""
    scheme = Scheme(scheme)
    if scheme is Scheme.PBS_BASELINE:
        return cspr_pbs(alpha, theta), list(BRANCH_WEIGHTS[scheme])
    vals = _CLOSED_FORM[scheme](alpha, theta)
    labels = list(BRANCH_WEIGHTS[scheme])
    if detectors == 3 and scheme in DROPPED_BRANCH:
        keep = [i for i, lab in enumerate(labels) if lab != DROPPED_BRANCH[scheme]]
        vals, labels = vals[keep], [labels[i] for i in keep]
    return vals, labels


def cspr_profile(scheme, alpha, theta, c_req_db=6.0, detectors=None):
    vals, labels = cspr_values(scheme, alpha, theta, detectors)
    return CsprProfile(Scheme(scheme), tuple(labels), tuple(float(v) for v in vals), c_req_db)


def second_max(values):
    """Second-largest entry along axis 0."""
    v = np.asarray(values)
    if v.shape[0] < 2:
        raise ValueError("second_max needs at least two values")
    return np.sort(v, axis=0)[-2]


def select_branches(profile, mode=SelectMode.ALL):
    """Branch labels to feed the MIMO equalizer.

    TOP2 keeps the two largest CSPRs; ties go to the branch listed first.
    """
    mode = SelectMode(mode)
    if mode is SelectMode.ALL:
        return list(profile.labels)
    order = sorted(range(len(profile.values)), key=lambda i: (-profile.values[i], i))
    return [profile.labels[i] for i in order[:2]]


def kkr_recover(current, gr, carrier_offset, rate, baud=56e9):
    """Kramers-Kronig field recovery from one photocurrent.

    The current is upsampled to ``gr.working_sps`` samples per symbol for the
    log/sqrt/Hilbert steps and the field is brought back to ``rate``.  The
    recovered field has its carrier at ``carrier_offset`` and the sideband
    centred at 0 Hz.  Non-positive samples are clamped to 1e-12 x mean.
    """
    current = np.asarray(current, dtype=float)
    if not np.any(current):
        raise ValueError("cannot recover a field from an all-zero photocurrent")
    factor = max(1.0, gr.working_sps * baud / rate)
    up = resample_array(current, factor) if factor != 1 else current
    floor = 1e-12 * np.mean(np.abs(up))
    up = np.maximum(up, floor)
    log_amp = 0.5 * np.log(up)
    field = np.sqrt(up) * np.exp(1j * hilbert_phase(log_amp))
    if factor != 1:
        field = resample_array(field, 1 / factor)
    sig = ComplexSignal(field, rate)
    if carrier_offset:
        sig = frequency_shift(sig, -carrier_offset)
    return sig


def estimate_cspr(x, carrier_offset=0.0, rate=1.0, bins=1):
    """CSPR estimate in dB, capped at +60 dB.

    Complex input (optical field): power in the tone bin(s) at
    ``carrier_offset`` against everything else.  Real input (photocurrent):
    moment fit assuming a Gaussian-like sideband, where mean = c + p and
    var = 2cp + p^2 for carrier power c and sideband power p.
    """
    x = np.asarray(x)
    if x.size == 0:
        raise ValueError("empty input")
    if np.iscomplexobj(x):
        n = x.size
        spec = np.abs(np.fft.fft(x)) ** 2
        k = int(np.round(carrier_offset * n / rate))
        idx = np.arange(k - bins + 1, k + bins) % n
        p_tone = spec[idx].sum()
        p_rest = spec.sum() - p_tone
    else:
        m, v = float(np.mean(x)), float(np.var(x))
        disc = m * m - v
        if disc <= 0:
            return -CSPR_CAP_DB
        p_rest = m - np.sqrt(disc)
        p_tone = m - p_rest
    if p_rest <= p_tone * 10 ** (-CSPR_CAP_DB / 10):
        return CSPR_CAP_DB
    if p_tone <= 0:
        return -CSPR_CAP_DB
    return float(min(CSPR_CAP_DB, 10 * np.log10(p_tone / p_rest)))
