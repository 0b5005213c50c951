"""NR sidelink frame-structure arithmetic.

Closed-form resource accounting for the sidelink physical layer: slot
durations per numerology, resource elements and payload bits per slot, slot
demand for a data frame, and the capacity of a latency-bounded selection
window.  Also defines the four preset pairings of numerology and subchannel
count (PRFS-1..PRFS-4) used throughout the simulator.
"""

import math
from dataclasses import dataclass

__all__ = [
    "FrameParams",
    "PrfsConfig",
    "PRFS_PRESETS",
    "slot_duration",
    "resource_elements_per_slot",
    "bits_per_slot",
    "slots_needed",
    "selection_window_capacity",
]


@dataclass(frozen=True)
class FrameParams:
    """Static per-slot frame-structure parameters.

    n_sy        : OFDM symbols per slot (AGC and guard symbols excluded)
    n_sr_prb    : subcarriers per PRB
    n_dmrs      : resource elements reserved for DMRS per PRB-slot
    n_prb_sh    : PRBs per subchannel
    n_sci1      : PRBs consumed by the control channel (PSCCH)
    n_sci2      : 2nd-stage control overhead in bits, carried on the data channel
    code_rate   : code rate R in (0, 1]
    mod_order   : modulation order Q_m (bits per symbol)
    n_layers    : spatial layers
    """

    n_sy: int = 12
    n_sr_prb: int = 12
    n_dmrs: int = 18
    n_prb_sh: int = 25
    n_sci1: int = 50
    n_sci2: int = 48
    code_rate: float = 0.7
    mod_order: int = 6
    n_layers: int = 1

    def __post_init__(self):
        for name in ("n_sy", "n_sr_prb", "n_prb_sh", "mod_order", "n_layers"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be strictly positive")
        for name in ("n_dmrs", "n_sci1", "n_sci2"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if self.n_dmrs > self.n_sy * self.n_sr_prb:
            raise ValueError("n_dmrs cannot exceed the resource elements of a PRB-slot")
        if not 0.0 < self.code_rate <= 1.0:
            raise ValueError("code_rate must be in (0, 1]")


def slot_duration(numerology):
    """Slot duration in seconds for a given numerology: 1 ms / 2^mu."""
    if numerology < 0:
        raise ValueError("numerology must be non-negative")
    return 1e-3 / 2 ** numerology


@dataclass(frozen=True)
class PrfsConfig:
    """A resource frame structure: numerology plus subchannel count.

    The four built-in presets trade slot duration against subchannels:
    PRFS-1 = (mu=3, 4 subchannels) ... PRFS-4 = (mu=6, 1 subchannel).
    Arbitrary (numerology, n_sh) pairs are accepted for experimentation.
    """

    id: str
    numerology: int
    n_sh: int

    def __post_init__(self):
        if self.numerology < 0:
            raise ValueError("numerology must be non-negative")
        if self.n_sh < 1:
            raise ValueError("n_sh must be at least 1")

    @property
    def slot_duration(self):
        return slot_duration(self.numerology)


PRFS_PRESETS = {
    1: PrfsConfig("PRFS-1", numerology=3, n_sh=4),
    2: PrfsConfig("PRFS-2", numerology=4, n_sh=3),
    3: PrfsConfig("PRFS-3", numerology=5, n_sh=2),
    4: PrfsConfig("PRFS-4", numerology=6, n_sh=1),
}


def resource_elements_per_slot(fp: FrameParams, cfg: PrfsConfig) -> int:
    """Resource elements usable for data in one slot.

    N_re = (n_sr_prb * n_sy - n_dmrs) * n_prb_sh * n_sh - n_sr_prb * n_sci1

    Raises ValueError when the control overhead exceeds the slot capacity,
    which signals an inconsistent configuration.
    """
    n_re = (fp.n_sr_prb * fp.n_sy - fp.n_dmrs) * fp.n_prb_sh * cfg.n_sh \
        - fp.n_sr_prb * fp.n_sci1
    if n_re < 0:
        raise ValueError(
            f"control overhead exceeds slot capacity (N_re = {n_re} < 0)")
    return n_re


def bits_per_slot(fp: FrameParams, cfg: PrfsConfig) -> int:
    """Payload bits per slot: floor(N_re * R * Q_m * n_layers - n_sci2).

    Raises ValueError when the result is not strictly positive.
    """
    n_re = resource_elements_per_slot(fp, cfg)
    bits = n_re * fp.code_rate * fp.mod_order * fp.n_layers - fp.n_sci2
    bits = math.floor(bits)
    if bits <= 0:
        raise ValueError(f"configuration carries no payload ({bits} bits per slot)")
    return bits


def slots_needed(data_bits, bits_per_slot):
    """Number of slots to carry ``data_bits``: ceil(data_bits / bits_per_slot)."""
    if data_bits <= 0:
        raise ValueError("data_bits must be strictly positive")
    if bits_per_slot <= 0:
        raise ValueError("bits_per_slot must be strictly positive")
    return -(-data_bits // bits_per_slot)


def selection_window_capacity(pdb, cfg: PrfsConfig):
    """Slots and (slot, subchannel) cells fitting a packet delay budget.

    ``pdb`` is in seconds.  Returns ``(n_slots, n_cells)`` with
    n_slots = floor(pdb / slot_duration) and n_cells = n_slots * n_sh.
    """
    if pdb <= 0:
        raise ValueError("pdb must be strictly positive")
    n_slots = int(pdb / cfg.slot_duration)
    return n_slots, n_slots * cfg.n_sh
