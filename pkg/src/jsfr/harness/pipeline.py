"""One Monte-Carlo trial: transmitter -> link -> front-end -> KKR -> DSP -> metrics."""

from __future__ import annotations

import numpy as np

from .. import channel, dsp, frontend, recovery, txchain
from ..core import resample, substream
from ..frontend import Scheme
from .config import ExperimentConfig, validate

FAIL_BER = 0.5  # reported for trials whose receiver could not lock


def trial_seed(master, trial):
    """Per-trial seed; shared by every sweep point (common random numbers)."""
    return int(substream(master, "harness.trial", trial).integers(0, 2 ** 63 - 1))


def _capture(cfg, seed):
    """Received Jones field plus the frame and carrier frequency."""
    fs = cfg.frame
    n_pol = cfg.rx.polarizations
    frame = txchain.generate_frame(fs, seed, n_pol=n_pol)
    sig = txchain.modulate(frame.symbols, fs, cfg.rrc)
    # offsets are snapped to the capture's bin grid so the waveform stays cyclic
    bin_hz = sig.sample_rate / len(sig)
    sig = channel.apply_frequency_offset(sig, round(cfg.laser_offset_hz / bin_hz) * bin_hz)
    sig = channel.apply_phase_noise(sig, cfg.linewidth_hz, seed)
    sig = txchain.insert_carrier(sig, cfg.carrier, fs.baud, cfg.rrc.rolloff, single_pol=n_pol == 1)
    f_c = txchain.carrier_frequency(sig, cfg.carrier, fs.baud, cfg.rrc.rolloff)

    link = cfg.link
    sig = channel.apply_cd(sig, link.fiber_km, link.beta2)
    if n_pol == 2:
        sig = channel.apply_rotation(sig, cfg.sop)
    if link.dgd_ps is not None or (link.fiber_km > 0 and link.pmd_param > 0):
        sig = channel.apply_pmd(sig, link)
    sig = channel.load_ase(sig, link.osnr_db, rng=substream(seed, "channel.ase"))
    if cfg.rx.obpf:
        m = cfg.rx.obpf_margin * fs.baud
        sig = channel.optical_bandpass(sig, f_c - m, fs.baud * (1 + cfg.rrc.rolloff) / 2 + m)
    if cfg.rx.capture_shift:
        # unknown capture start, on the 2-SPS grid used after recovery
        step = cfg.rrc.sps // 2
        shift = int(substream(seed, "harness.capture").integers(0, 2 * fs.frame_len)) * step
        sig = sig.with_array(np.roll(sig.as_array(), shift, axis=1))
    return sig, frame, f_c


def _labels(cfg):
    rx = cfg.rx
    if rx.polarizations == 1:
        return Scheme.PBS_BASELINE, ["X"]
    labels = list(frontend.BRANCH_WEIGHTS[rx.scheme])
    if rx.detectors == 3 and rx.scheme in recovery.DROPPED_BRANCH:
        labels.remove(recovery.DROPPED_BRANCH[rx.scheme])
    return rx.scheme, labels


def _recover(cfg, sig, f_c, seed):
    """Photocurrents -> per-branch baseband fields at 2 SPS, plus CSPR estimates."""
    scheme, labels = _labels(cfg)
    det = frontend.detect(frontend.split_branches(sig, scheme, labels),
                          cfg.rx.electrical_snr_db, seed)
    if cfg.rx.reconstruct and (cfg.rx.detectors == 3 or scheme is Scheme.COUPLER_3X3):
        det = frontend.complete_currents(det)
    est = {lab: recovery.estimate_cspr(i) for lab, i in det.currents.items()}
    profile = recovery.CsprProfile(det.scheme, tuple(est), tuple(est.values()), cfg.gr.c_req_db)
    chosen = recovery.select_branches(profile, cfg.rx.select)
    baud = cfg.frame.baud
    fields = {}
    for lab in chosen:
        f = recovery.kkr_recover(det.currents[lab], cfg.gr, f_c, det.sample_rate, baud)
        f = dsp.remove_tone(f, f_c)
        fields[lab] = resample(f, 2 * baud)
    return fields, est


def _failed(note, est):
    return dsp.Metrics(FAIL_BER, float("nan"), dsp.q_from_ber(FAIL_BER),
                       list(est.values()), False, 0, 0, note)


def run_trial(cfg: ExperimentConfig, point=None, seed=0):
    """Full link simulation for one sweep point; deterministic in (cfg, point, seed).

    Receiver failures (no training peak, non-finite equalizer) come back as
    Metrics with ``converged=False`` and BER 0.5 rather than as exceptions.
    """
    cfg = validate(cfg.with_point(point))
    fs = cfg.frame
    sig, frame, f_c = _capture(cfg, seed)
    fields, est = _recover(cfg, sig, f_c, seed)

    labels = list(fields)
    r = cfg.rrc
    L, b2 = cfg.link.fiber_km, cfg.link.beta2
    if cfg.rx.foe:
        # estimate on dispersion-compensated, matched-filtered copies (clean 4th-power
        # tone); the correction itself is applied once, ahead of CD compensation
        df = dsp.estimate_freq_offset([dsp.matched_filter(dsp.cd_compensate(v, L, b2),
                                                          r.rolloff, r.span, sps=2)
                                       for v in fields.values()])
        fields = {k: dsp.correct_freq_offset(v, df) for k, v in fields.items()}
    waves = np.array([dsp.matched_filter(dsp.cd_compensate(fields[k], L, b2),
                                         r.rolloff, r.span, sps=2).samples for k in labels])

    train = frame.symbols[:, frame.train_idx]
    try:
        sync = dsp.synchronize(waves, dsp.training_waveform(train, sps=2))
    except dsp.SyncError as exc:
        return _failed(f"sync: {exc}", est)

    spec = dsp.MimoSpec(n_inputs=len(labels), taps=cfg.mimo.taps,
                        train_len=min(cfg.mimo.train_len, frame.train_idx.size),
                        rls_lambda=cfg.mimo.rls_lambda, mode=cfg.mimo.mode, delta=cfg.mimo.delta)
    known = np.concatenate([frame.train_idx, frame.pilot_idx])
    with np.errstate(all="ignore"):
        res = dsp.mimo_equalize(waves, frame.symbols, spec, offset=sync.offset,
                                qam_order=fs.qam_order, known=frame.pilot_idx)
    if not np.all(np.isfinite(res.streams)):
        return _failed("equalizer diverged", est)

    known = np.sort(known)
    rx = np.array([dsp.carrier_phase_estimate(s, known, frame.symbols[p, known], cfg.cpe,
                                              fs.qam_order)
                   for p, s in enumerate(res.streams)])
    d = frame.data_idx
    rx_data = rx[:, d]
    bits = txchain.demap_symbols(rx_data.ravel(), fs.qam_order)
    tx_bits = txchain.demap_symbols(frame.symbols[:, d].ravel(), fs.qam_order)
    note = "" if res.converged else "equalizer did not converge"
    return dsp.compute_metrics(bits, tx_bits, rx_data, frame.symbols[:, d],
                               list(est.values()), res.converged, note)
