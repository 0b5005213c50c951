"""Analytic 60 GHz channel and antenna-array model.

Uniform linear arrays with a 3GPP-style directional element pattern, DFT
beamforming codebooks, a single-path line-of-sight channel (free-space path
loss plus oxygen absorption), codeword selection for data transmission and
for sensing, and SINR evaluation with explicit interferer sets.

All powers are handled in linear units (watts) internally; dB and dBm appear
only at interfaces.
"""

import math
from dataclasses import dataclass, field

import numpy as np

SPEED_OF_LIGHT = 299_792_458.0      # m/s
BOLTZMANN = 1.380649e-23            # J/K

# Single-element radiation pattern (azimuth cut): parabolic attenuation with
# 65 deg half-power beamwidth, clipped at 30 dB, on top of an 8 dBi peak.
ELEMENT_PEAK_GAIN_DB = 8.0
ELEMENT_3DB_BEAMWIDTH = math.radians(65.0)
ELEMENT_MAX_ATTENUATION_DB = 30.0

DEFAULT_OXYGEN_DB_PER_KM = 15.0     # 60 GHz oxygen absorption


def db_to_linear(x_db):
    return 10.0 ** (np.asarray(x_db, dtype=float) / 10.0)


def linear_to_db(x):
    return 10.0 * np.log10(x)


def watts_to_dbm(p_w):
    return 10.0 * np.log10(p_w) + 30.0


def dbm_to_watts(p_dbm):
    return 10.0 ** ((p_dbm - 30.0) / 10.0)


def wrap_angle(a):
    """Wrap an angle (radians) to (-pi, pi]."""
    return -((-np.asarray(a) + np.pi) % (2.0 * np.pi) - np.pi)


@dataclass(frozen=True)
class ArrayConfig:
    """Uniform linear array: element count, spacing in wavelengths, and the
    boresight azimuth in the world frame."""

    n_elements: int
    spacing: float = 0.5
    boresight: float = 0.0

    def __post_init__(self):
        if self.n_elements < 1:
            raise ValueError("n_elements must be at least 1")
        if self.spacing <= 0:
            raise ValueError("spacing must be strictly positive")


def steering_vector(cfg: ArrayConfig, azimuth):
    """Array response for a plane wave at ``azimuth`` (radians, local frame).

    Element m carries phase exp(j * 2*pi * spacing * m * sin(azimuth));
    every entry has unit modulus.
    """
    m = np.arange(cfg.n_elements)
    return np.exp(2j * np.pi * cfg.spacing * m * np.sin(azimuth))


def element_gain_db(angle_off_boresight):
    """Single-element gain in dBi at an angle off boresight.

    -min(12 * (theta / theta_3dB)^2, A_max) + peak, with theta_3dB = 65 deg,
    A_max = 30 dB and an 8 dBi peak.  Accepts scalars or arrays.
    """
    theta = np.abs(wrap_angle(angle_off_boresight))
    attenuation = np.minimum(
        12.0 * (theta / ELEMENT_3DB_BEAMWIDTH) ** 2, ELEMENT_MAX_ATTENUATION_DB)
    return ELEMENT_PEAK_GAIN_DB - attenuation


@dataclass(frozen=True)
class Codebook:
    """Ordered set of unit-norm beamforming vectors with their steering
    directions (azimuth, elevation) in the array's local frame."""

    entries: np.ndarray             # (n_codewords, n_elements) complex
    directions: np.ndarray          # (n_codewords, 2) [azimuth, elevation]

    def __post_init__(self):
        if len(self.entries) < 1:
            raise ValueError("codebook must contain at least one entry")
        norms = np.linalg.norm(self.entries, axis=1)
        if not np.allclose(norms, 1.0, atol=1e-9):
            raise ValueError("codebook entries must have unit norm")

    def __len__(self):
        return len(self.entries)


def dft_codebook(cfg: ArrayConfig) -> Codebook:
    """DFT codebook of size n_elements covering azimuths in (-90, +90) deg.

    Beams are placed on the half-bin-shifted DFT grid, uniform in sine space:
    sin(theta_k) = (2k + 1 - N) / (2 * N * spacing), which keeps the set
    symmetric around boresight and mutually orthogonal at half-wavelength
    spacing.  Elevation is fixed to zero (planar scenario).
    """
    n = cfg.n_elements
    sines = (2.0 * np.arange(n) + 1.0 - n) / (2.0 * n * cfg.spacing)
    sines = np.clip(sines, -1.0, 1.0)
    azimuths = np.arcsin(sines)
    entries = np.stack(
        [steering_vector(cfg, az) / math.sqrt(n) for az in azimuths])
    directions = np.column_stack([azimuths, np.zeros(n)])
    return Codebook(entries=entries, directions=directions)


def boresight_combiner(cfg: ArrayConfig) -> np.ndarray:
    """Unit-norm combining vector steered at the array boresight."""
    return steering_vector(cfg, 0.0) / math.sqrt(cfg.n_elements)


@dataclass(frozen=True)
class ChannelMatrix:
    """Complex receive-by-transmit channel between one vehicle pair."""

    gains: np.ndarray               # (n_rx, n_tx) complex
    carrier_frequency: float        # Hz
    distance: float                 # m

    def __post_init__(self):
        if self.distance <= 0:
            raise ValueError("distance must be strictly positive")
        if not np.all(np.isfinite(self.gains)):
            raise ValueError("channel gains must be finite")


def free_space_path_loss_db(distance, fc):
    """Friis free-space path loss: 20 log10(4 pi d fc / c)."""
    return 20.0 * np.log10(4.0 * np.pi * distance * fc / SPEED_OF_LIGHT)


def los_channel(tx_pos, rx_pos, tx_array: ArrayConfig, rx_array: ArrayConfig,
                fc, oxygen_db_per_km=DEFAULT_OXYGEN_DB_PER_KM) -> ChannelMatrix:
    """Single-path line-of-sight channel between two positions.

    H = g * a_rx(theta_rx) * a_tx(theta_tx)^H, a rank-one outer product of
    the arrival and departure array responses.  The scalar amplitude g folds
    in free-space path loss at ``fc``, oxygen absorption, and the element
    gains at the departure and arrival angles (each measured off the
    respective array's boresight).
    """
    tx_pos = np.asarray(tx_pos, dtype=float)
    rx_pos = np.asarray(rx_pos, dtype=float)
    delta = rx_pos - tx_pos
    distance = float(np.hypot(delta[0], delta[1]))
    if distance == 0.0:
        raise ValueError("transmitter and receiver positions coincide")

    bearing_tx = math.atan2(delta[1], delta[0])          # departure, world frame
    bearing_rx = math.atan2(-delta[1], -delta[0])        # arrival, world frame
    theta_tx = wrap_angle(bearing_tx - tx_array.boresight)
    theta_rx = wrap_angle(bearing_rx - rx_array.boresight)

    loss_db = (free_space_path_loss_db(distance, fc)
               + oxygen_db_per_km * distance / 1e3)
    gain_db = (element_gain_db(theta_tx) + element_gain_db(theta_rx)) - loss_db
    wavelength = SPEED_OF_LIGHT / fc
    g = math.sqrt(db_to_linear(gain_db)) * np.exp(-2j * np.pi * distance / wavelength)

    a_tx = steering_vector(tx_array, theta_tx)
    a_rx = steering_vector(rx_array, theta_rx)
    gains = g * np.outer(a_rx, a_tx.conj())
    return ChannelMatrix(gains=gains, carrier_frequency=fc, distance=distance)


def select_tx_codeword(H: ChannelMatrix, cb: Codebook, rx_combiner) -> int:
    """Index of the codebook entry maximizing |u^H H w|^2.

    Ties are broken toward the lowest index.
    """
    if len(cb) < 1:
        raise ValueError("codebook is empty")
    u = np.asarray(rx_combiner)
    metric = np.abs(u.conj() @ H.gains @ cb.entries.T) ** 2
    return int(np.argmax(metric))


def select_sensing_codeword(cb_rx: Codebook, direction) -> int:
    """Index of the receive codeword whose steering direction is closest
    (Euclidean, azimuth wrapped) to ``direction`` = (azimuth, elevation).

    Ties are broken toward the lowest index.
    """
    direction = np.asarray(direction, dtype=float)
    d_az = wrap_angle(cb_rx.directions[:, 0] - direction[0])
    d_el = cb_rx.directions[:, 1] - direction[1]
    return int(np.argmin(np.hypot(d_az, d_el)))


@dataclass(frozen=True)
class LinkBudget:
    """Transmit power, receiver noise description and decode threshold."""

    tx_power: float = dbm_to_watts(23.0)    # W
    noise_temperature: float = 300.0        # K
    bandwidth: float = 400e6                # Hz
    sinr_threshold_db: float = 0.0

    def __post_init__(self):
        if self.tx_power <= 0 or self.noise_temperature <= 0 or self.bandwidth <= 0:
            raise ValueError("tx_power, noise_temperature and bandwidth must be positive")


def noise_power(lb: LinkBudget) -> float:
    """Thermal noise power k * T * B in watts."""
    return BOLTZMANN * lb.noise_temperature * lb.bandwidth


def received_power(H: ChannelMatrix, w, u, tx_power) -> float:
    """|u^H H w|^2 * P_tx in watts."""
    u = np.asarray(u)
    w = np.asarray(w)
    return float(np.abs(u.conj() @ H.gains @ w) ** 2) * tx_power


def sinr_db(signal, interferers, lb: LinkBudget) -> float:
    """SINR in dB for one transmission.

    ``signal`` is a (H, w, u) triple for the intended pair; ``interferers``
    is a list of (H, w) pairs for the transmissions sharing resources with
    it, each evaluated at the intended receiver with the same combiner u.
    """
    H, w, u = signal
    p_signal = received_power(H, w, u, lb.tx_power)
    p_interference = 0.0
    for H_l, w_l in interferers:
        p_interference += received_power(H_l, w_l, u, lb.tx_power)
    return float(linear_to_db(p_signal / (noise_power(lb) + p_interference)))
