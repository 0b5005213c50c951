"""
Comparing the three channel-access schemes
==========================================

Runs the full simulator on a one-way high-density street and compares the
directional sensing scheme (control messages announced toward the receiver
and on the opposite beam), its primary-direction-only variant, and blind
random selection.  Sensing lets a link steer its reservation around the
announced resources of its neighbors, which shows up directly in the
collision probability; the paired-direction announcement closes the hidden
zone behind each transmitter.

Runtime: about half a minute.
"""

import numpy as np

from mmv2x.engine import SimConfig, run
from mmv2x.metrics import collision_probability, sinr_summary
from mmv2x.scenario import ScenarioConfig

SEEDS = (1, 2, 3)
WARMUP_S = 2.0    # first reselection-counter lifetime: allocations are blind

print("scheme   collision  decode-fail  median SINR")
for scheme in ("dbra", "dbra-o", "rra"):
    collisions, failures, medians = [], [], []
    for seed in SEEDS:
        cfg = SimConfig(
            scheme=scheme,
            scenario=ScenarioConfig.preset("1w-hd", seed=seed, k_rx=1),
            frame_size=2_000_000,     # 20 Mbps at 10 frames per second
            duration=6.0, seed=seed)
        records = run(cfg)
        cut = WARMUP_S / cfg.prfs.slot_duration
        steady = [r for r in records if r.slot >= cut]
        collisions.append(collision_probability(steady))
        failures.append(np.mean([not r.decoded for r in steady]))
        medians.append(sinr_summary(steady)["median"])
    print(f"{scheme:7s}  {np.mean(collisions):9.3f}  {np.mean(failures):11.3f}"
          f"  {np.mean(medians):8.1f} dB")

print("\nThe same comparison is available from the command line, e.g.:")
print("  mmv2x --scheme dbra,dbra-o,rra --scenario 1w-hd --krx 1 \\")
print("        --rate-mbps 20 --duration-s 6 --seed 1 --out results")
