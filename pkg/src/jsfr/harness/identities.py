"""Batch check of the front-end algebra: CSPR closed forms, SecondMax minima,
photocurrent reconstruction identities and the 3x3 coupler matrix."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..channel import rotation_matrix
from ..frontend import (BRANCH_WEIGHTS, COUPLER_3X3, COUPLER_A, COUPLER_B, Scheme,
                        reconstruct_from_3x3, reconstruct_missing_2x2,
                        reconstruct_missing_hybrid)
from ..recovery import cspr_values, second_max

# 181 x 361 grid over the SOP domain alpha in [0, pi/2], theta in [0, pi]
# (half-degree steps, so the 22.5-degree SecondMax minima lie on the grid)
GRID_SHAPE = (181, 361)
RESIDUAL_TOL = 1e-9
MINIMUM_TOL = 1e-3


@dataclass
class Check:
    name: str
    value: float  # residual, or the measured quantity for range checks
    target: str
    passed: bool


@dataclass
class IdentityReport:
    checks: list

    @property
    def passed(self):
        return all(c.passed for c in self.checks)

    @property
    def max_residual(self):
        return max((c.value for c in self.checks if c.target.startswith("<")), default=0.0)

    def lines(self):
        out = [f"{'PASS' if c.passed else 'FAIL'}  {c.name}: {c.value:.3e} (want {c.target})"
               for c in self.checks]
        out.append(f"{'PASS' if self.passed else 'FAIL'}  overall, max residual {self.max_residual:.3e}")
        return out


def grid(n_alpha=GRID_SHAPE[0], n_theta=GRID_SHAPE[1]):
    return np.meshgrid(np.linspace(0, np.pi / 2, n_alpha), np.linspace(0, np.pi, n_theta),
                       indexing="ij")


def brute_force_multipliers(scheme, alpha, theta, xi=0.0):
    """Branch CSPR multipliers from explicit carrier and signal Jones vectors.

    Carrier at 45 degrees with per-polarization power equal to CSPR x signal
    power; signals rotated by xi.  Independent of the closed forms.
    """
    w = np.array(list(BRANCH_WEIGHTS[Scheme(scheme)].values()), dtype=complex)  # (B, 2)
    r = np.moveaxis(rotation_matrix(alpha, theta), (0, 1), (-2, -1))  # (..., 2, 2)
    ks = np.array([[np.cos(xi), -np.sin(xi)], [np.sin(xi), np.cos(xi)]])
    wr = np.einsum("bi,...ij->...bj", w, r)
    carrier = np.abs(wr.sum(axis=-1)) ** 2
    signal = np.sum(np.abs(wr @ ks) ** 2, axis=-1)
    return np.moveaxis(carrier / signal, -1, 0)


def _random_fields(n, rng):
    return [(rng.standard_normal(n) + 1j * rng.standard_normal(n)) for _ in range(2)]


def verify_identities(n_pairs=10_000, seed=0):
    """Run every check; returns an :class:`IdentityReport`."""
    checks = []
    al, th = grid()

    def residual(name, r):
        checks.append(Check(name, float(r), f"< {RESIDUAL_TOL:g}", bool(r < RESIDUAL_TOL)))

    def near(name, v, target):
        checks.append(Check(name, float(v), f"{target:.4f} +- {MINIMUM_TOL:g}",
                            bool(abs(v - target) <= MINIMUM_TOL)))

    c22 = cspr_values(Scheme.COUPLER_2X2, al, th)[0]
    chy = cspr_values(Scheme.HYBRID_90, al, th)[0]
    c33 = cspr_values(Scheme.COUPLER_3X3, al, th)[0]
    residual("2x2 pair sum X + Y = 2", np.max(np.abs(c22[0] + c22[1] - 2)))
    residual("2x2 pair sum (X+Y) + (X-Y) = 2", np.max(np.abs(c22[2] + c22[3] - 2)))
    residual("hybrid pair sum (X+Y) + (X-Y) = 2", np.max(np.abs(chy[0] + chy[1] - 2)))
    residual("hybrid pair sum (X+jY) + (X-jY) = 2", np.max(np.abs(chy[2] + chy[3] - 2)))
    for scheme, vals in ((Scheme.COUPLER_2X2, c22), (Scheme.HYBRID_90, chy), (Scheme.COUPLER_3X3, c33)):
        residual(f"{scheme.value} closed form vs brute force",
                 np.max(np.abs(vals - brute_force_multipliers(scheme, al, th))))
        residual(f"{scheme.value} multipliers independent of carrier angle xi",
                 np.max(np.abs(vals - brute_force_multipliers(scheme, al, th, xi=0.7))))

    m22, mhy = second_max(c22).min(), second_max(chy).min()
    checks.append(Check("2x2 SecondMax >= C_req everywhere (4 detectors)", float(m22),
                        ">= 1", bool(m22 >= 1 - RESIDUAL_TOL)))
    checks.append(Check("hybrid SecondMax >= C_req everywhere (4 detectors)", float(mhy),
                        ">= 1", bool(mhy >= 1 - RESIDUAL_TOL)))
    near("3x3 grid minimum of SecondMax", second_max(c33).min(), 0.5)
    target = 1 - np.sqrt(2) / 2
    near("2x2 grid minimum of SecondMax (3 detectors)",
         second_max(cspr_values(Scheme.COUPLER_2X2, al, th, detectors=3)[0]).min(), target)
    near("hybrid grid minimum of SecondMax (3 detectors)",
         second_max(cspr_values(Scheme.HYBRID_90, al, th, detectors=3)[0]).min(), target)

    rng = np.random.default_rng(seed)
    x, y = _random_fields(n_pairs, rng)
    p = lambda f: np.abs(f) ** 2  # noqa: E731
    residual("2x2 reconstruction |X-Y|^2",
             np.max(np.abs(reconstruct_missing_2x2(p(x), p(y), p(x + y)) - p(x - y))))
    residual("hybrid reconstruction |X-jY|^2",
             np.max(np.abs(reconstruct_missing_hybrid(p(x + y), p(x - y), p(x + 1j * y))
                           - p(x - 1j * y))))
    outs = COUPLER_3X3 @ np.vstack([x, y, np.zeros_like(x)])
    # the three coupler currents for inputs (X, Y, 0) are |aX+bY|^2, |bX+bY|^2, |bX+aY|^2
    i1 = p(COUPLER_A * x + COUPLER_B * y)
    i2 = p(COUPLER_B * x + COUPLER_B * y)
    i3 = p(COUPLER_B * x + COUPLER_A * y)
    residual("3x3 outputs match the coupler matrix",
             np.max(np.abs(np.vstack([i1, i2, i3]) - p(outs[[0, 2, 1]]))))
    want = (p(x + y), p(x - y), p(x + 1j * y), p(x - 1j * y))
    got = reconstruct_from_3x3(i1, i2, i3)
    residual("3x3 reconstruction of the four hybrid currents",
             max(np.max(np.abs(g - w)) for g, w in zip(got, want)))

    residual("3x3 coupler unitary", np.max(np.abs(COUPLER_3X3 @ COUPLER_3X3.conj().T - np.eye(3))))
    residual("|a|^2 = 1/3", abs(abs(COUPLER_A) ** 2 - 1 / 3))
    residual("|b|^2 = 1/3", abs(abs(COUPLER_B) ** 2 - 1 / 3))
    return IdentityReport(checks)
