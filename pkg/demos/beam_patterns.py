"""
Arrays, codebooks and link budgets at 60 GHz
============================================

Shows the ingredients of the directional channel model: the single-element
radiation pattern, the DFT codebook of a uniform linear array, beam
selection over a line-of-sight channel, and how the received SNR grows with
the array size.
"""

import math

import numpy as np

from mmv2x.beams import (ArrayConfig, LinkBudget, boresight_combiner,
                         dft_codebook, element_gain_db, los_channel,
                         noise_power, received_power, select_sensing_codeword,
                         select_tx_codeword, sinr_db, watts_to_dbm)

# single-element pattern: 8 dBi peak, 65 deg half-power width, 30 dB floor
print("angle off boresight ->  element gain")
for deg in (0, 30, 65, 120, 180):
    print(f"  {deg:5d} deg           {element_gain_db(math.radians(deg)):8.1f} dBi")

# the DFT codebook of an 8-element array covers the frontal half plane
cb = dft_codebook(ArrayConfig(8))
print("\n8-element DFT codebook steering azimuths [deg]:")
print("  " + "  ".join(f"{math.degrees(a):+6.1f}" for a in cb.directions[:, 0]))

# beam selection on a line-of-sight link, and the sensing beam that follows it
lb = LinkBudget()
tx = ArrayConfig(16, boresight=0.0)
rx = ArrayConfig(2, boresight=math.pi)
target = np.array([60.0, 18.0])          # ahead and slightly to the left
H = los_channel([0.0, 0.0], target, tx, rx, 60e9)
cb_tx = dft_codebook(tx)
u0 = boresight_combiner(rx)
k = select_tx_codeword(H, cb_tx, u0)
cb_rx = dft_codebook(ArrayConfig(2, boresight=0.0))
u_s = select_sensing_codeword(cb_rx, cb_tx.directions[k])
bearing = math.degrees(math.atan2(target[1], target[0]))
print(f"\nreceiver at bearing {bearing:+.1f} deg, {np.hypot(*target):.0f} m:")
print(f"  data beam index {k} steering "
      f"{math.degrees(cb_tx.directions[k, 0]):+.1f} deg; "
      f"sensing beam index {u_s} of the receive codebook")

# received power and SNR vs the transmit array size, boresight aligned
print(f"\nnoise floor: {watts_to_dbm(noise_power(lb)):.1f} dBm "
      f"(T = {lb.noise_temperature:.0f} K, B = {lb.bandwidth / 1e6:.0f} MHz)")
print("n_tx   P_rx [dBm]   SNR [dB]  (100 m, boresight aligned)")
for n_tx in (4, 16, 64):
    tx_n = ArrayConfig(n_tx)
    H = los_channel([0.0, 0.0], [100.0, 0.0], tx_n, rx, 60e9)
    cb_n = dft_codebook(tx_n)
    w = cb_n.entries[select_tx_codeword(H, cb_n, u0)]
    p = received_power(H, w, u0, lb.tx_power)
    snr = sinr_db((H, w, u0), [], lb)
    print(f"{n_tx:4d}   {watts_to_dbm(p):9.1f}   {snr:8.1f}")
