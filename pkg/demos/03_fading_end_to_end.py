"""End to end: PBS baseline against the 2x2 Jones-space receiver.

At the worst rotation (alpha = 45 deg, theta = 0) the PBS receiver loses the
carrier on one axis and its BER collapses toward 0.5; the 2x2 coupler front
end recovers four branch fields and lets the MIMO equalizer undo the rotation.

Run:  python demos/03_fading_end_to_end.py   (about half a minute)
"""

from dataclasses import replace

import numpy as np

from jsfr.channel import SopState
from jsfr.dsp import MimoMode, MimoSpec
from jsfr.frontend import Scheme
from jsfr.harness import ExperimentConfig, ReceiverSpec, run_trial
from jsfr.txchain import FrameSpec

base = ExperimentConfig(frame=FrameSpec(payload_len=4096), mimo=MimoSpec(taps=11, mode=MimoMode.TRAIN_THEN_DD))

for alpha in (0.0, np.pi / 8, np.pi / 4):
    cfg = replace(base, sop=SopState(alpha, 0.0))
    pbs = run_trial(replace(cfg, rx=ReceiverSpec(scheme=Scheme.PBS_BASELINE)), seed=1)
    jsfr = run_trial(cfg, seed=1)
    print(f"alpha = {np.degrees(alpha):4.1f} deg   PBS BER {pbs.ber:.2e}   2x2 JSFR BER {jsfr.ber:.2e}")
