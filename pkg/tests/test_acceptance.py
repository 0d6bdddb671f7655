"""Acceptance criteria, each run at its stated tolerance.

Every test records one ``PASS``/``FAIL`` line; ``conftest.py`` prints them at
the end of the session, and ``python tests/test_acceptance.py`` runs the same
checks standalone.  Nothing here is loosened to make a check pass: the known
failures are described in the test docstrings.
"""

import time
from dataclasses import replace

import numpy as np
import pytest

from jsfr.core import RrcSpec
from jsfr.frontend import (COUPLER_3X3, COUPLER_A, COUPLER_B, Scheme, reconstruct_from_3x3,
                           reconstruct_missing_2x2, reconstruct_missing_hybrid)
from jsfr.harness import sweep
from jsfr.harness.cli import load_preset
from jsfr.harness.identities import grid
from jsfr.harness.sweep import summarize
from jsfr.recovery import (GrSpec, SelectMode, cspr_2x2, cspr_3x3, cspr_hybrid, cspr_profile,
                           kkr_recover, second_max, select_branches)
from jsfr.txchain import (CarrierSpec, FrameSpec, carrier_frequency, compute_net_rate,
                          generate_frame, modulate)

RESULTS = {}
DESK_PAYLOAD = 2 ** 13


def record(n, ok, detail, elapsed):
    RESULTS[n] = f"{'PASS' if ok else 'FAIL'}  criterion {n}: {detail} [{elapsed:.1f} s]"
    print(RESULTS[n])


def desk(cfg, trials):
    """Preset at desk scale: 2^13 payload symbols, ``trials`` per point."""
    return replace(cfg, frame=replace(cfg.frame, payload_len=DESK_PAYLOAD), trials_per_point=trials)


def sci(a):
    return "[" + ", ".join(f"{v:.2e}" for v in a) + "]"


def osnr_at_ber(osnrs, bers, target=1e-2):
    """OSNR where BER crosses ``target`` going down, interpolated in log10(BER)."""
    lb = np.log10(np.maximum(bers, 1e-12))
    lt = np.log10(target)
    for i in range(len(osnrs) - 1):
        if lb[i] >= lt > lb[i + 1]:
            return osnrs[i] + (lb[i] - lt) / (lb[i] - lb[i + 1]) * (osnrs[i + 1] - osnrs[i])
    return float("nan")


# -- 1 --------------------------------------------------------------------------------------

def test_criterion_1_cspr_algebra():
    t0 = time.perf_counter()
    a, t = grid()
    assert a.shape == (181, 361)
    c22, chy, c33 = cspr_2x2(a, t), cspr_hybrid(a, t), cspr_3x3(a, t)
    pair = max(np.max(np.abs(c22[0] + c22[1] - 2)), np.max(np.abs(c22[2] + c22[3] - 2)))
    sm22, smhy = second_max(c22).min(), second_max(chy).min()
    m33 = second_max(c33).min()
    m22_3 = second_max(np.delete(c22, 3, axis=0)).min()
    mhy_3 = second_max(np.delete(chy, 3, axis=0)).min()
    target = 1 - np.sqrt(2) / 2
    dt = time.perf_counter() - t0
    ok = (pair < 1e-12 and sm22 >= 1 and smhy >= 1 and abs(m33 - 0.5) <= 1e-3
          and abs(m22_3 - target) <= 1e-3 and abs(mhy_3 - target) <= 1e-3 and dt < 5)
    record(1, ok, f"pair-sum residual {pair:.1e}, SecondMax min 2x2 {sm22:.4f} hybrid {smhy:.4f}, "
                  f"3x3 {m33:.4f}, 3-detector 2x2 {m22_3:.4f} hybrid {mhy_3:.4f}", dt)
    assert ok


# -- 2 --------------------------------------------------------------------------------------

def test_criterion_2_reconstruction_identities():
    t0 = time.perf_counter()
    rng = np.random.default_rng(2024)
    x = rng.standard_normal(10_000) + 1j * rng.standard_normal(10_000)
    y = rng.standard_normal(10_000) + 1j * rng.standard_normal(10_000)
    p = lambda f: np.abs(f) ** 2  # noqa: E731
    r9 = np.max(np.abs(reconstruct_missing_2x2(p(x), p(y), p(x + y)) - p(x - y)))
    r12 = np.max(np.abs(reconstruct_missing_hybrid(p(x + y), p(x - y), p(x + 1j * y)) - p(x - 1j * y)))
    got = reconstruct_from_3x3(p(COUPLER_A * x + COUPLER_B * y), p(COUPLER_B * (x + y)),
                               p(COUPLER_B * x + COUPLER_A * y))
    r15 = max(np.max(np.abs(g - w)) for g, w in zip(got, (p(x + y), p(x - y), p(x + 1j * y), p(x - 1j * y))))
    unit = np.max(np.abs(COUPLER_3X3 @ COUPLER_3X3.conj().T - np.eye(3)))
    ab = max(abs(abs(COUPLER_A) ** 2 - 1 / 3), abs(abs(COUPLER_B) ** 2 - 1 / 3))
    dt = time.perf_counter() - t0
    ok = max(r9, r12, r15) < 1e-10 and unit < 1e-12 and ab < 1e-12 and dt < 5
    record(2, ok, f"residuals 2x2 {r9:.1e}, hybrid {r12:.1e}, 3x3 {r15:.1e}; "
                  f"unitarity {unit:.1e}, |a|^2,|b|^2 error {ab:.1e}", dt)
    assert ok


# -- 3 --------------------------------------------------------------------------------------

def test_criterion_3_worked_examples():
    """The 3x3 example is expected to fail: the closed form gives (0.256, 1.851, 0.893)."""
    t0 = time.perf_counter()
    v = cspr_2x2(np.pi / 4, np.pi / 3)
    sel = set(select_branches(cspr_profile(Scheme.COUPLER_2X2, np.pi / 4, np.pi / 3), SelectMode.TOP2))
    v33 = cspr_3x3(np.pi / 16, np.pi / 16)
    rate = compute_net_rate(FrameSpec(payload_len=22400, n_pilots=80), 0.14)
    ok2x2 = np.allclose(v, [0.5, 1.5, 0.25, 1.75], atol=1e-12) and sel == {"Y", "X-Y"}
    ok33 = np.allclose(v33, [0.51, 3.7, 1.88], atol=0.01)
    okrate = abs(rate - 382.8) <= 0.1
    dt = time.perf_counter() - t0
    ok = ok2x2 and ok33 and okrate
    record(3, ok, f"2x2 example {'ok' if ok2x2 else 'MISMATCH'} {np.round(v, 4).tolist()} -> "
                  f"{sorted(sel)}; 3x3 at pi/16 {np.round(v33, 3).tolist()} vs [0.51, 3.7, 1.88] "
                  f"{'ok' if ok33 else 'MISMATCH'}; net rate {rate:.2f} Gb/s", dt)
    assert ok


# -- 4 --------------------------------------------------------------------------------------

@pytest.mark.slow
def test_criterion_4_polarization_fading_contrast():
    t0 = time.perf_counter()
    pbs = sweep(desk(load_preset("fig2a"), 1))
    _, tp = summarize(pbs)
    pbs_worst = max(tp.values())
    jsfr = sweep(desk(load_preset("fig2b"), 2))
    _, tj = summarize(jsfr)
    b = np.array(list(tj.values()))
    dt = time.perf_counter() - t0
    ok = pbs_worst > 1e-1 and b.max() < 1e-2 and b.max() / b.min() <= 3 and dt < 600
    record(4, ok, f"PBS worst-SOP BER {pbs_worst:.3e}; JSFR over {b.size} SOPs "
                  f"{b.min():.2e}..{b.max():.2e} (max/min {b.max() / b.min():.2f})", dt)
    assert ok


# -- 5 --------------------------------------------------------------------------------------

@pytest.mark.slow
def test_criterion_5_sp_dp_osnr_gap():
    t0 = time.perf_counter()
    cfg = desk(load_preset("fig3a"), 2)
    _, table = summarize(sweep(cfg))
    osnrs = sorted({k[1] for k in table})
    req = {pol: osnr_at_ber(osnrs, [table[(pol, o)] for o in osnrs]) for pol in (1, 2)}
    gap = req[2] - req[1]
    dt = time.perf_counter() - t0
    ok = abs(gap - 3.0) <= 0.5 and dt < 600
    record(5, ok, f"OSNR at BER 1e-2: SP {req[1]:.2f} dB, DP {req[2]:.2f} dB, gap {gap:.2f} dB", dt)
    assert ok


# -- 6 --------------------------------------------------------------------------------------

@pytest.mark.slow
def test_criterion_6_pmd_tolerance():
    t0 = time.perf_counter()
    cfg = desk(load_preset("fig3b"), 2)
    _, table = summarize(sweep(cfg), over=("alpha", "theta"))
    dgds = sorted({k[1] for k in table})
    one = np.array([table[(1, d)] for d in dgds])
    five = np.array([table[(5, d)] for d in dgds])
    dt = time.perf_counter() - t0
    ok = (five.max() / five.min() <= 2 and np.all(np.diff(one) > 0)
          and one[-1] > 5 * one[0] and dt < 900)
    record(6, ok, f"worst-SOP BER vs DGD {dgds} T: 1-tap {sci(one)}, "
                  f"5-tap {sci(five)} (5-tap max/min {five.max() / five.min():.2f})",
           dt)
    assert ok


# -- 7 --------------------------------------------------------------------------------------

@pytest.mark.slow
def test_criterion_7_carrier_sop_invariance():
    t0 = time.perf_counter()
    cfg = desk(load_preset("xi-sweep"), 8)
    _, table = summarize(sweep(cfg))
    b = np.array(list(table.values()))
    dt = time.perf_counter() - t0
    ok = b.max() / b.min() <= 2 and dt < 300
    record(7, ok, f"BER vs xi {sci(b)} (max/min {b.max() / b.min():.2f})", dt)
    assert ok


# -- 8 --------------------------------------------------------------------------------------

@pytest.mark.slow
def test_criterion_8_carrier_boost():
    """Expected to fail at desk scale on both halves.

    Boosted (C_req + 3 dB) BER sits near 1.2e-2 everywhere because OSNR counts
    the carrier, so the extra carrier costs 2.5 dB of signal SNR; unboosted
    worst points stay near 1.2e-2, below the 5e-2 failure mark.
    """
    t0 = time.perf_counter()
    cfg = desk(load_preset("carrier-boost"), 2)
    _, table = summarize(sweep(cfg))
    boosted = np.array([v for k, v in table.items() if k[0] == 9])
    plain = np.array([v for k, v in table.items() if k[0] == 6])
    dt = time.perf_counter() - t0
    ok_boost = bool(np.all(boosted < 1e-2))
    ok_plain = bool(plain.max() > 5e-2)
    ok = ok_boost and ok_plain and dt < 600
    record(8, ok, f"3x3 with 3 detectors, 35 SOPs: CSPR 9 dB worst {boosted.max():.2e} "
                  f"({np.sum(boosted >= 1e-2)} points >= 1e-2); CSPR 6 dB worst {plain.max():.2e} "
                  f"(needs > 5e-2)", dt)
    assert ok


# -- 9 --------------------------------------------------------------------------------------

def _ssb_branch(cspr_db, seed=0):
    f = generate_frame(FrameSpec(payload_len=DESK_PAYLOAD), seed)
    s = modulate(f.symbols[:1], f.spec, RrcSpec(0.01, 64, 4)).x
    fc = carrier_frequency(s, CarrierSpec())
    amp = np.sqrt(10 ** (cspr_db / 10) * np.mean(np.abs(s.samples) ** 2))
    field = s.samples + amp * np.exp(2j * np.pi * fc * np.arange(len(s)) / s.sample_rate)
    return field, fc, s.sample_rate


def _kkr_error_db(cspr_db):
    field, fc, rate = _ssb_branch(cspr_db)
    got = kkr_recover(np.abs(field) ** 2, GrSpec(), fc, rate).samples
    ph = np.angle(np.vdot(got, field))
    return 10 * np.log10(np.mean(np.abs(got * np.exp(1j * ph) - field) ** 2) / np.mean(np.abs(field) ** 2))


def test_criterion_9_kkr_correctness():
    t0 = time.perf_counter()
    c = GrSpec().c_req_db
    errs = [_kkr_error_db(c + d) for d in (0.0, 3.0, 6.0)]
    dt = time.perf_counter() - t0
    ok = errs[1] < -30 and errs[0] > errs[1] > errs[2] and dt < 60
    record(9, ok, f"KKR error at C_req +0/+3/+6 dB: {', '.join(f'{e:.1f}' for e in errs)} dB", dt)
    assert ok


if __name__ == "__main__":
    import sys
    for name, fn in sorted(globals().items()):
        if name.startswith("test_criterion_"):
            try:
                fn()
            except AssertionError:
                pass
    print("\n".join(RESULTS[k] for k in sorted(RESULTS)))
    sys.exit(0 if all(v.startswith("PASS") for v in RESULTS.values()) else 1)
