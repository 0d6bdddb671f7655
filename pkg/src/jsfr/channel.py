"""Link model: static SOP rotation, chromatic dispersion, sectioned PMD, ASE.

Every stage except noise loading is unitary (or all-pass) per frequency bin.

Transfer functions are written in the optics convention, where a field
component at angular frequency w evolves as exp(-j w t).  numpy's FFT uses
exp(+j w t), so each H(w) below is applied as its complex conjugate on FFT
bins (for real delays and dispersion this is H(-w) on the bin frequency).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import JonesSignal, substream

C_LIGHT = 299_792_458.0
OSNR_REF_BW = 12.5e9  # 0.1 nm at 1550 nm

# E[DGD] = sqrt(8 / (3 pi)) * sqrt(sum tau_k^2) for isotropically coupled sections
MAXWELL_MEAN = np.sqrt(8 / (3 * np.pi))
# relative spread of the per-section DGD draw, tau_k = tau_0 * |1 + SPREAD * N(0, 1)|
SECTION_SPREAD = 0.2


def beta2_from_d(d_ps_nm_km=17.0, wavelength=1550e-9):
    """Group-velocity dispersion beta2 (s^2/m) from D in ps/(nm km)."""
    d = d_ps_nm_km * 1e-6  # s/m^2
    return -d * wavelength ** 2 / (2 * np.pi * C_LIGHT)


@dataclass(frozen=True)
class SopState:
    alpha: float = 0.0
    theta: float = 0.0

    def matrix(self):
        return rotation_matrix(self.alpha, self.theta)


@dataclass(frozen=True)
class LinkSpec:
    fiber_km: float = 0.0
    beta2: float = beta2_from_d(17.0)
    pmd_sections: int = 15
    pmd_param: float = 0.1  # ps / sqrt(km)
    osnr_db: float | None = 30.0  # None = noise off
    seed: int = 0
    dgd_ps: float | None = None  # pin the realised DGD instead of drawing it

    def __post_init__(self):
        if self.pmd_sections < 1:
            raise ValueError("pmd_sections must be >= 1")


def rotation_matrix(alpha, theta):
    return np.array([[np.cos(alpha) * np.exp(1j * theta), -np.sin(alpha)],
                     [np.sin(alpha), np.cos(alpha) * np.exp(-1j * theta)]])


def apply_rotation(sig, sop):
    return sig.with_array(sop.matrix() @ sig.as_array())


def cd_transfer(n, rate, fiber_km, beta2, sign=+1):
    """CD response on FFT bins; ``sign=-1`` gives the compensating inverse."""
    w = 2 * np.pi * np.fft.fftfreq(n, 1.0 / rate)
    # conjugate of the optics-convention exp(+j beta2 w^2 L / 2)
    return np.exp(-sign * 1j * beta2 * w ** 2 * fiber_km * 1e3 / 2)


def apply_cd(sig, fiber_km, beta2):
    """All-pass dispersion H(w) = exp(+j beta2 w^2 L / 2) (optics convention) on both polarizations."""
    if fiber_km == 0:
        return sig
    h = cd_transfer(len(sig), sig.sample_rate, fiber_km, beta2)
    return sig.with_array(np.fft.ifft(np.fft.fft(sig.as_array(), axis=1) * h, axis=1))


def random_unitary(rng):
    """Haar-random 2x2 unitary."""
    z = (rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


@dataclass
class PmdRealization:
    """Section rotations and birefringent delays (s) of one fiber draw."""

    rotations: np.ndarray  # (K, 2, 2)
    taus: np.ndarray  # (K,)

    def transfer(self, omega):
        """Jones matrices T(w) in the optics convention, shape (len(omega), 2, 2).

        Each section is a rotation followed by diag(exp(+j w tau/2), exp(-j w tau/2)),
        so X lags Y by tau.
        """
        omega = np.atleast_1d(np.asarray(omega, dtype=float))
        t = np.broadcast_to(np.eye(2, dtype=complex), (omega.size, 2, 2)).copy()
        for rot, tau in zip(self.rotations, self.taus):
            ph = np.exp(0.5j * omega * tau)
            t = rot[None] @ t
            t[:, 0, :] *= ph[:, None]
            t[:, 1, :] *= ph.conj()[:, None]
        return t

    def dgd(self, omega=0.0, d_omega=2 * np.pi * 1e6):
        return dgd_from_transfer(self.transfer([omega - d_omega / 2, omega + d_omega / 2]), d_omega)

    def scaled(self, factor):
        return PmdRealization(self.rotations, self.taus * factor)


def dgd_from_transfer(t_pair, d_omega):
    """DGD from Jones matrices at two nearby frequencies (eigen-analysis)."""
    m = t_pair[1] @ np.linalg.inv(t_pair[0])
    ev = np.linalg.eigvals(m)
    return abs(np.angle(ev[0] / ev[1])) / d_omega


def draw_pmd(spec):
    """Random sectioned fiber for ``spec``; deterministic given ``spec.seed``.

    Section delays are scaled so the ensemble-mean DGD equals
    ``pmd_param * sqrt(fiber_km)``; if ``spec.dgd_ps`` is set the delays are
    instead rescaled so this particular draw has exactly that DGD.
    """
    rng = substream(spec.seed, "channel.pmd")
    k = spec.pmd_sections
    rotations = np.stack([random_unitary(rng) for _ in range(k)])
    raw = np.abs(1 + SECTION_SPREAD * rng.standard_normal(k))
    mean_dgd = spec.pmd_param * 1e-12 * np.sqrt(spec.fiber_km)
    tau0 = mean_dgd / MAXWELL_MEAN / np.sqrt(k * (1 + SECTION_SPREAD ** 2))
    real = PmdRealization(rotations, raw * tau0)
    if spec.dgd_ps is not None:
        if spec.dgd_ps == 0:
            return real.scaled(0.0)
        unit = PmdRealization(rotations, raw * 1e-12)
        return unit.scaled(spec.dgd_ps * 1e-12 / unit.dgd())
    return real


def apply_pmd(sig, spec, realization=None):
    """Frequency-domain all-order PMD through ``spec.pmd_sections`` sections."""
    real = realization if realization is not None else draw_pmd(spec)
    n = len(sig)
    omega = -2 * np.pi * np.fft.fftfreq(n, 1.0 / sig.sample_rate)  # optics convention
    t = real.transfer(omega)
    spec_xy = np.fft.fft(sig.as_array(), axis=1)
    out = np.einsum("fij,jf->if", t, spec_xy)
    return sig.with_array(np.fft.ifft(out, axis=1))


def ase_sigma2(total_power, osnr_db, sample_rate):
    """Per-polarization complex noise variance for a target OSNR.

    OSNR = total optical power (carrier + signal, both polarizations) over the
    ASE power of both polarizations in the 12.5 GHz reference bandwidth.
    """
    return total_power * sample_rate / (2 * OSNR_REF_BW * 10 ** (osnr_db / 10))


def load_ase(sig, osnr_db, seed=0, rng=None):
    """Add unpolarized white ASE at ``osnr_db``; ``None`` leaves the signal alone."""
    if osnr_db is None:
        return sig
    if not np.isfinite(osnr_db):
        raise ValueError("osnr_db must be finite (use None for no noise)")
    xy = sig.as_array()
    p_tot = float(np.sum(np.mean(np.abs(xy) ** 2, axis=1)))
    s2 = ase_sigma2(p_tot, osnr_db, sig.sample_rate)
    rng = rng if rng is not None else substream(seed, "channel.ase")
    noise = rng.standard_normal(xy.shape) + 1j * rng.standard_normal(xy.shape)
    return sig.with_array(xy + np.sqrt(s2 / 2) * noise)


def measure_osnr(sig, noise_band):
    """OSNR estimate from the spectrum of a noisy Jones signal.

    ``noise_band`` = (f_lo, f_hi) in Hz: a stretch of spectrum holding only
    ASE, used to read the noise floor.
    """
    xy = sig.as_array()
    n = xy.shape[1]
    f = np.fft.fftfreq(n, 1.0 / sig.sample_rate)
    psd = np.sum(np.abs(np.fft.fft(xy, axis=1)) ** 2, axis=0) / n ** 2  # power per bin
    sel = (f >= noise_band[0]) & (f <= noise_band[1])
    floor = psd[sel].mean()  # noise power per bin, both pols
    bin_hz = sig.sample_rate / n
    p_noise_total = floor * n
    p_sig = psd.sum() - p_noise_total
    return 10 * np.log10(p_sig / (floor * OSNR_REF_BW / bin_hz))


def optical_bandpass(sig, f_lo, f_hi):
    """Ideal brick-wall optical filter passing [f_lo, f_hi]."""
    n = len(sig)
    f = np.fft.fftfreq(n, 1.0 / sig.sample_rate)
    mask = (f >= f_lo) & (f <= f_hi)
    return sig.with_array(np.fft.ifft(np.fft.fft(sig.as_array(), axis=1) * mask, axis=1))


def apply_frequency_offset(sig, df):
    """Carrier/LO frequency mismatch: content at f moves to f + df."""
    if df == 0:
        return sig
    ph = np.exp(2j * np.pi * df * np.arange(len(sig)) / sig.sample_rate)
    return sig.with_array(sig.as_array() * ph)


def apply_phase_noise(sig, linewidth, seed=0):
    """Wiener phase noise for a combined laser ``linewidth`` (Hz)."""
    if linewidth == 0:
        return sig
    rng = substream(seed, "channel.phase_noise")
    var = 2 * np.pi * linewidth / sig.sample_rate
    phi = np.cumsum(rng.normal(0.0, np.sqrt(var), len(sig)))
    return sig.with_array(sig.as_array() * np.exp(1j * phi))
