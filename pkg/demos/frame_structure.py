"""
Sidelink frame-structure arithmetic
===================================

Walks through the resource accounting that everything else builds on: how
many resource elements and payload bits one slot carries under each of the
four frame-structure presets, how many slots a data frame needs, and how
many (slot, subchannel) cells a latency budget admits.
"""

from mmv2x.phy import (PRFS_PRESETS, FrameParams, bits_per_slot,
                       resource_elements_per_slot, selection_window_capacity,
                       slots_needed)

fp = FrameParams()   # reference parameter set: 12 symbols, 25 PRBs/subchannel, ...

print("preset   mu  n_sh  slot[us]  REs/slot  bits/slot")
for idx, prfs in PRFS_PRESETS.items():
    print(f"{prfs.id}   {prfs.numerology}    {prfs.n_sh}   "
          f"{prfs.slot_duration * 1e6:8.3f}  {resource_elements_per_slot(fp, prfs):8d}  "
          f"{bits_per_slot(fp, prfs):9d}")

# A 5.7 Mbps application at 10 frames per second sends 0.57 Mb frames.
# Under PRFS-1 each slot carries 50 352 bits, so one frame occupies:
prfs1 = PRFS_PRESETS[1]
s_s = bits_per_slot(fp, prfs1)
for rate_mbps in (5.7, 20, 40):
    frame_bits = round(rate_mbps * 1e5)
    n_s = slots_needed(frame_bits, s_s)
    slots, cells = selection_window_capacity(10e-3, prfs1)
    print(f"D = {rate_mbps:4} Mbps: frame = {frame_bits:>7} bits -> "
          f"{n_s:3d} cells of the {cells} in a 10 ms window "
          f"({n_s / cells:5.1%} of the pool)")

# The selection window scales with the delay budget: a tighter deadline
# leaves fewer candidate resources.
for pdb_ms in (10, 25, 50):
    slots, cells = selection_window_capacity(pdb_ms * 1e-3, prfs1)
    print(f"PDB = {pdb_ms:2d} ms -> {slots:4d} slots, {cells:5d} cells")
