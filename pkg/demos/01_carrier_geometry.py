"""Why a PBS receiver fades and a Jones-space front end does not.

With the carrier on X and the signal split over X and Y, a polarization
beam splitter hands each photodiode whatever share of the carrier the fiber
left on that axis.  Rotate the SOP far enough and one branch has no carrier:
single-polarization field recovery on that branch is impossible.  Mixing X and
Y before detection (2x2 coupler, 90-degree hybrid, 3x3 coupler) keeps at least
two branches above the requirement at every SOP.

Run:  python demos/01_carrier_geometry.py
"""

import numpy as np

from jsfr.harness.identities import grid
from jsfr.recovery import cspr_2x2, cspr_3x3, cspr_hybrid, cspr_pbs, second_max

alpha, theta = grid()  # 181 x 361 over alpha in [0, pi/2], theta in [0, pi]

# branch CSPR in units of the requirement C_req (1.0 = just enough carrier)
for name, f in [("PBS", cspr_pbs), ("2x2", cspr_2x2), ("hybrid", cspr_hybrid), ("3x3", cspr_3x3)]:
    c = f(alpha, theta)
    print(f"{name:>6}: {c.shape[0]} branches, worst branch min {c.min():.3f}, "
          f"SecondMax min {second_max(c).min():.3f}")

# a single rotation, branch by branch
a, t = np.pi / 4, np.pi / 3
print("\n2x2 branches (X, Y, X+Y, X-Y) at alpha=45 deg, theta=pi/3:", np.round(cspr_2x2(a, t), 3))
print("PBS branches (X, Y) at alpha=45 deg:", np.round(cspr_pbs(a, t), 3))

# the 3x3 coupler only guarantees SecondMax = 0.5 C_req, hence the 3 dB boost
print(f"\n3x3 needs {10 * np.log10(1 / second_max(cspr_3x3(alpha, theta)).min()):.2f} dB "
      "more carrier to run on its weakest two branches")
