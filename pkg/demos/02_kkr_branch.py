"""Kramers-Kronig recovery of one SSB branch, and what too little carrier does.

A single branch sees |C + S|^2.  When the carrier dominates, log|C + S| and
the phase form a Hilbert pair and the field comes back from intensity alone.
Below the requirement the minimum-phase condition breaks and the error rises
steeply.

Run:  python demos/02_kkr_branch.py
"""

import numpy as np

from jsfr.core import RrcSpec
from jsfr.recovery import GrSpec, kkr_recover
from jsfr.txchain import CarrierSpec, FrameSpec, carrier_frequency, generate_frame, modulate

frame = generate_frame(FrameSpec(payload_len=8192), seed=7)
s = modulate(frame.symbols[:1], frame.spec, RrcSpec(0.01, 64, 4)).x
fc = carrier_frequency(s, CarrierSpec())
n = np.arange(len(s))
ps = np.mean(np.abs(s.samples) ** 2)

print("CSPR (dB)   recovery error (dB rel. field power)")
for cspr_db in (0, 3, 6, 9, 12):
    field = s.samples + np.sqrt(10 ** (cspr_db / 10) * ps) * np.exp(2j * np.pi * fc * n / s.sample_rate)
    got = kkr_recover(np.abs(field) ** 2, GrSpec(), fc, s.sample_rate).samples
    got = got * np.exp(1j * np.angle(np.vdot(got, field)))  # a common phase is unobservable
    err = np.mean(np.abs(got - field) ** 2) / np.mean(np.abs(field) ** 2)
    print(f"{cspr_db:9d}   {10 * np.log10(err):8.1f}")
