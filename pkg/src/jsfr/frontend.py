"""Optical front-ends ahead of square-law detection, and the photocurrent identities.

Branch fields use unit-gain combinations (X+Y rather than (X+Y)/sqrt2) for the
2x2 and 90-degree hybrid receivers; the 3x3 coupler uses its unitary matrix.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .core import ComplexSignal, fractional_delay, substream


class Scheme(str, enum.Enum):
    PBS_BASELINE = "pbs"
    COUPLER_2X2 = "2x2"
    HYBRID_90 = "hybrid"
    COUPLER_3X3 = "3x3"


# 3x3 symmetric coupler entries
COUPLER_A = (2 * np.exp(2j * np.pi / 9) + np.exp(-4j * np.pi / 9)) / 3
COUPLER_B = (np.exp(-4j * np.pi / 9) - np.exp(2j * np.pi / 9)) / 3
COUPLER_3X3 = np.array([[COUPLER_A, COUPLER_B, COUPLER_B],
                        [COUPLER_B, COUPLER_A, COUPLER_B],
                        [COUPLER_B, COUPLER_B, COUPLER_A]])

# branch label -> (weight on X, weight on Y)
BRANCH_WEIGHTS = {
    Scheme.PBS_BASELINE: {"X": (1, 0), "Y": (0, 1)},
    Scheme.COUPLER_2X2: {"X": (1, 0), "Y": (0, 1), "X+Y": (1, 1), "X-Y": (1, -1)},
    Scheme.HYBRID_90: {"X+Y": (1, 1), "X-Y": (1, -1), "X+jY": (1, 1j), "X-jY": (1, -1j)},
    Scheme.COUPLER_3X3: {"aX+bY": (COUPLER_A, COUPLER_B), "bX+bY": (COUPLER_B, COUPLER_B),
                         "bX+aY": (COUPLER_B, COUPLER_A)},
}


@dataclass
class BranchSet:
    """Per-branch optical fields (before detection) and/or photocurrents (after)."""

    scheme: Scheme
    sample_rate: float
    fields: dict = field(default_factory=dict)
    currents: dict = field(default_factory=dict)

    @property
    def labels(self):
        return list(self.currents or self.fields)


def branch_matrix(scheme, labels=None):
    """Rows map (X, Y) onto each branch field."""
    w = BRANCH_WEIGHTS[Scheme(scheme)]
    labels = list(w) if labels is None else labels
    return np.array([w[k] for k in labels], dtype=complex), labels


def split_branches(sig, scheme, labels=None, delays=None, h=None):
    """Optical branch fields of ``scheme`` for a received Jones signal.

    ``delays`` maps label -> path-length mismatch in samples (fractional ok).
    ``h`` is an optional pre-detection branch kernel (FFT-domain response over
    the capture's bins); only the identity kernel is used by the KK receiver.
    """
    try:
        scheme = Scheme(scheme)
    except ValueError:
        raise ValueError(f"unknown front-end scheme {scheme!r}") from None
    m, labels = branch_matrix(scheme, labels)
    xy = sig.as_array()
    out = m @ xy
    if h is not None:
        out = np.fft.ifft(np.fft.fft(out, axis=1) * h, axis=1)
    delays = delays or {}
    fields = {}
    for lab, row in zip(labels, out):
        if delays.get(lab, 0):
            row = fractional_delay(row, delays[lab])
        fields[lab] = ComplexSignal(row, sig.sample_rate, sig.center_offset)
    return BranchSet(scheme, sig.sample_rate, fields=fields)


def detect(branches, electrical_snr_db=None, seed=0):
    """Square-law detection (responsivity 1) with optional white electrical noise.

    The electrical SNR is the ratio of the photocurrent's AC variance to the
    added noise variance, per branch.
    """
    if not branches.fields:
        raise ValueError("branch set has no optical fields to detect")
    currents = {}
    for i, (lab, f) in enumerate(branches.fields.items()):
        cur = np.abs(f.samples) ** 2
        if electrical_snr_db is not None:
            rng = substream(seed, "frontend.detect", i)
            sigma = np.sqrt(np.var(cur) / 10 ** (electrical_snr_db / 10))
            cur = cur + sigma * rng.standard_normal(cur.size)
        currents[lab] = cur
    return BranchSet(branches.scheme, branches.sample_rate, dict(branches.fields), currents)


def _same_length(*xs):
    xs = [np.asarray(x, dtype=float) for x in xs]
    if len({x.shape for x in xs}) != 1:
        raise ValueError("photocurrents must have equal lengths")
    return xs


def reconstruct_missing_2x2(i_x, i_y, i_sum):
    """|X-Y|^2 from |X|^2, |Y|^2 and |X+Y|^2."""
    i_x, i_y, i_sum = _same_length(i_x, i_y, i_sum)
    return 2 * i_x + 2 * i_y - i_sum


def reconstruct_missing_hybrid(i_sum, i_diff, i_pjy):
    """|X-jY|^2 from |X+Y|^2, |X-Y|^2 and |X+jY|^2."""
    i_sum, i_diff, i_pjy = _same_length(i_sum, i_diff, i_pjy)
    return i_sum + i_diff - i_pjy


def reconstruct_from_3x3(i1, i2, i3):
    """(|X+Y|^2, |X-Y|^2, |X+jY|^2, |X-jY|^2) from the three 3x3-coupler currents."""
    i1, i2, i3 = _same_length(i1, i2, i3)
    r3 = np.sqrt(3)
    return (3 * i2,
            2 * i1 - i2 + 2 * i3,
            (1 - r3) * i1 + i2 + (1 + r3) * i3,
            (1 + r3) * i1 + i2 + (1 - r3) * i3)


def complete_currents(branches):
    """Fill in the undetected branch of a 3-detector 2x2/hybrid front-end, or
    expand a 3x3 front-end into the four hybrid-equivalent currents."""
    cur = dict(branches.currents)
    if branches.scheme is Scheme.COUPLER_2X2 and "X-Y" not in cur:
        cur["X-Y"] = reconstruct_missing_2x2(cur["X"], cur["Y"], cur["X+Y"])
        return BranchSet(branches.scheme, branches.sample_rate, branches.fields, cur)
    if branches.scheme is Scheme.HYBRID_90 and "X-jY" not in cur:
        cur["X-jY"] = reconstruct_missing_hybrid(cur["X+Y"], cur["X-Y"], cur["X+jY"])
        return BranchSet(branches.scheme, branches.sample_rate, branches.fields, cur)
    if branches.scheme is Scheme.COUPLER_3X3:
        four = reconstruct_from_3x3(cur["aX+bY"], cur["bX+bY"], cur["bX+aY"])
        cur = dict(zip(BRANCH_WEIGHTS[Scheme.HYBRID_90], four))
        return BranchSet(Scheme.HYBRID_90, branches.sample_rate, {}, cur)
    return branches
