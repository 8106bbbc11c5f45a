"""
Monte Carlo on a Walsh Brownian motion with sectors
===================================================

Walsh Brownian motion picks a uniform angle for each excursion. Time spent in
angular sectors is then the occupation time of a spider whose leg weights are
the sector widths over 2 pi. Here we simulate that spider and compare with the
exact moments. The grid is coarse so the script finishes in under a minute;
tighten ``step`` for smaller discretisation bias.
"""

import math
from fractions import Fraction

from spider_moments import (
    BesselLaw,
    MgfQuery,
    MultiIndex,
    SimConfig,
    estimate_joint_moments,
    estimate_mgf,
    joint_moment_closed,
    mgf_bessel_closed,
    sector_weights,
    uniform_angle_cdf,
)

config = sector_weights(uniform_angle_cdf, [0, math.pi / 2, 2 * math.pi])
print("sector weights:", [str(b) for b in config.betas])

law = BesselLaw(Fraction(-1, 2))
sim = SimConfig(step=1e-3, threshold=math.sqrt(1e-3), replicates=40_000, master_seed=1)
indices = [MultiIndex.of(1), MultiIndex.of(1, 1), MultiIndex.of(2, 1), MultiIndex({1: 3})]
for idx, est in zip(indices, estimate_joint_moments(law, config, indices, sim)):
    exact = joint_moment_closed(law.order.nu, config, idx)
    print(f"{str(idx):>10}  mc {est.mean:.5f} +- {est.std_error:.5f}   exact {str(exact):>8} = {float(exact):.5f}"
          f"   z {est.z_score(float(exact)):+.2f}")

q = MgfQuery(1.0, (1.0, 0.0))
est = estimate_mgf(law, config, q, sim)
print(f"\nMGF at lambda=1, z=(1,0): mc {est.mean:.5f} +- {est.std_error:.5f}"
      f"   closed {mgf_bessel_closed(law.order.nu, config, q):.5f}")

# the same seed reproduces the same numbers bit for bit
again = estimate_joint_moments(law, config, indices[:1], sim)[0]
print("reproducible:", again.mean == estimate_joint_moments(law, config, indices[:1], sim)[0].mean)
