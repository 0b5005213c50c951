"""Per-link Mode 2 semi-persistent allocation state machine.

Implements the selection flow for three channel-access schemes:

* ``dbra``   -- sensing of control messages received in both the primary and
  the paired direction; sensed reservations with sufficient RSRP block cells.
* ``dbra-o`` -- same, but only primary-direction messages are considered.
* ``rra``    -- no sensing; resources drawn uniformly at random.

The flow per data frame: while the reselection counter (RC) is positive the
previous reservation is reused and RC decremented; at RC = 0 the same cells
are kept with probability p_rc, otherwise the sensing window is aggregated
into a resource grid, over-blocked grids are relaxed in 3 dB threshold steps
until more than the configured fraction of cells is available, and a fresh
set of cells is drawn uniformly among the free ones.
"""

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .phy import PrfsConfig

RSRP_STEP_DB = 3.0          # threshold escalation step
DEFAULT_RRI_MS = 100.0
DEFAULT_MIN_FREE_FRACTION = 0.2

PRIMARY = "primary"
PAIRED = "paired"


class Scheme(str, Enum):
    DBRA = "dbra"
    DBRA_O = "dbra-o"
    RRA = "rra"


class PdbViolation(ValueError):
    """The frame demands more cells than the selection window offers."""


@dataclass(frozen=True)
class SciMessage:
    """First-stage control message announcing a reservation.

    ``reserved_cells`` holds (absolute slot, subchannel) pairs; the
    reservation repeats with period ``rri_ms``.  ``direction`` tags the beam
    the message was emitted on; paired-direction messages exist only under
    the full scheme.
    """

    sender: int
    link: tuple
    reserved_cells: tuple
    rri_ms: float
    emitted_slot: int
    direction: str

    def __post_init__(self):
        if not self.reserved_cells:
            raise ValueError("an SCI must reserve at least one cell")
        if self.direction not in (PRIMARY, PAIRED):
            raise ValueError(f"unknown direction {self.direction!r}")


@dataclass(frozen=True)
class ReceivedSci:
    """An SCI as seen by one sensing link, with its measured RSRP."""

    message: SciMessage
    rsrp_dbm: float


@dataclass(frozen=True)
class WindowTiming:
    """Sensing and selection window spans, in slots relative to 'now'.

    Sensing window: [now - t0, now - t_s0]; selection window
    [now + t1, now + t2] with t2 bounded by the delay budget.
    """

    t0: int
    t2: int
    t_s0: int = 1
    t1: int = 2

    def __post_init__(self):
        if not self.t0 > self.t_s0 >= 0:
            raise ValueError("need t0 > t_s0 >= 0")
        if not 0 <= self.t1 < self.t2:
            raise ValueError("need 0 <= t1 < t2")

    @property
    def n_selection_slots(self):
        return self.t2 - self.t1 + 1


class ResourceGrid:
    """Occupancy map of (slot, subchannel) cells over one selection window.

    Each cell carries the strongest RSRP of the reservations projected onto
    it (-inf when unreserved).  A cell is *reserved* when that RSRP exceeds
    the current threshold, *selected* once chosen for transmission, and
    *free* otherwise, so raising the threshold unblocks low-RSRP cells.
    """

    def __init__(self, window_start, n_slots, n_sh, threshold_dbm=-math.inf):
        self.window_start = int(window_start)
        self.n_slots = int(n_slots)
        self.n_sh = int(n_sh)
        self.threshold_dbm = threshold_dbm
        self.rsrp_dbm = np.full((self.n_slots, self.n_sh), -math.inf)
        self.selected = np.zeros((self.n_slots, self.n_sh), dtype=bool)

    @property
    def n_cells(self):
        return self.n_slots * self.n_sh

    def contains_slot(self, slot):
        return self.window_start <= slot < self.window_start + self.n_slots

    def mark_reservation(self, cells, rsrp_dbm):
        """Record a sensed reservation; keeps the per-cell maximum RSRP."""
        for slot, sub in cells:
            if self.contains_slot(slot):
                row = slot - self.window_start
                if rsrp_dbm > self.rsrp_dbm[row, sub]:
                    self.rsrp_dbm[row, sub] = rsrp_dbm

    def reserved_mask(self):
        return (self.rsrp_dbm > self.threshold_dbm) & ~self.selected

    def free_mask(self):
        return (self.rsrp_dbm <= self.threshold_dbm) & ~self.selected

    def n_free(self):
        return int(self.free_mask().sum())

    def n_reserved(self):
        return int(self.reserved_mask().sum())

    def cells_of(self, mask):
        rows, subs = np.nonzero(mask)
        return [(int(r) + self.window_start, int(s)) for r, s in zip(rows, subs)]

    def mark_selected(self, cells):
        for slot, sub in cells:
            self.selected[slot - self.window_start, sub] = True

    def state(self, slot, sub):
        row = slot - self.window_start
        if self.selected[row, sub]:
            return "selected"
        if self.rsrp_dbm[row, sub] > self.threshold_dbm:
            return "reserved"
        return "free"


@dataclass
class LinkState:
    """Allocation state owned by one transmitter-receiver pair."""

    link: tuple
    codeword: int = -1
    rc: int = 0
    reserved_cells: list = field(default_factory=list)
    rsrp_threshold_dbm: float = -math.inf
    base_rsrp_threshold_dbm: float = -math.inf


def init_rc(rri_ms, rng) -> int:
    """Draw a reselection counter for the given reservation interval.

    For intervals below 100 ms the counter is scaled by C = 100 / max(20, rri)
    and drawn uniformly in [5C, 15C]; otherwise uniformly in [5, 15].
    """
    if rri_ms <= 0:
        raise ValueError("rri must be strictly positive")
    if rri_ms < 100:
        c = 100.0 / max(20.0, rri_ms)
        lo, hi = math.ceil(5 * c), math.floor(15 * c)
    else:
        lo, hi = 5, 15
    return int(rng.integers(lo, hi + 1))


def rri_to_slots(rri_ms, prfs: PrfsConfig) -> int:
    return round(rri_ms * 1e-3 / prfs.slot_duration)


def collect_sensing_window(scheme, received, timing: WindowTiming, now,
                           prfs: PrfsConfig, threshold_dbm=-math.inf):
    """Aggregate received SCI into the resource grid of the upcoming
    selection window.

    Every announced reservation is projected forward at its advertised
    repetition period onto [now + t1, now + t2]; the grid keeps the
    strongest RSRP per cell.  Under ``rra`` the grid stays untouched (the
    scheme ignores control information); under ``dbra-o`` paired-direction
    messages are discarded.
    """
    scheme = Scheme(scheme)
    grid = ResourceGrid(now + timing.t1, timing.n_selection_slots, prfs.n_sh,
                        threshold_dbm=threshold_dbm)
    if scheme is Scheme.RRA:
        return grid

    win_start, win_end = grid.window_start, grid.window_start + grid.n_slots - 1
    for rx in received:
        msg = rx.message
        if not (now - timing.t0 <= msg.emitted_slot <= now - timing.t_s0):
            continue
        if scheme is Scheme.DBRA_O and msg.direction != PRIMARY:
            continue
        period = rri_to_slots(msg.rri_ms, prfs)
        projected = []
        for slot, sub in msg.reserved_cells:
            k = max(0, -((slot - win_start) // period))
            s = slot + k * period
            while s <= win_end:
                projected.append((s, sub))
                s += period
        if projected:
            grid.mark_reservation(projected, rx.rsrp_dbm)
    return grid


def select_resources(grid: ResourceGrid, n_s, min_free_fraction,
                     link: LinkState, rng):
    """Choose ``n_s`` distinct cells from the selection window.

    While the free cells do not exceed ``min_free_fraction`` of the window,
    the link's RSRP threshold is raised in 3 dB steps, unblocking the
    weakest sensed reservations.  The cells are then drawn uniformly among
    the free ones; if fewer than ``n_s`` are free, the remainder is drawn
    uniformly among the still-blocked cells and the selection is flagged as
    forced (a collision is likely unavoidable).

    Returns ``(cells, forced)`` with cells sorted by (slot, subchannel).
    """
    if n_s < 1:
        raise ValueError("n_s must be at least 1")
    if n_s > grid.n_cells:
        raise PdbViolation(
            f"frame needs {n_s} cells but the selection window holds only "
            f"{grid.n_cells}; the delay budget cannot be met")

    grid.threshold_dbm = link.rsrp_threshold_dbm
    while grid.n_free() <= min_free_fraction * grid.n_cells and grid.n_reserved() > 0:
        if math.isfinite(link.rsrp_threshold_dbm):
            link.rsrp_threshold_dbm += RSRP_STEP_DB
        else:
            # a -inf starting threshold: snap to the weakest sensed RSRP
            finite = grid.rsrp_dbm[np.isfinite(grid.rsrp_dbm)]
            link.rsrp_threshold_dbm = float(finite.min())
        grid.threshold_dbm = link.rsrp_threshold_dbm

    free = grid.cells_of(grid.free_mask())
    if len(free) >= n_s:
        picked = rng.choice(len(free), size=n_s, replace=False)
        cells = [free[i] for i in picked]
        forced = False
    else:
        blocked = grid.cells_of(grid.reserved_mask())
        extra = rng.choice(len(blocked), size=n_s - len(free), replace=False)
        cells = free + [blocked[i] for i in extra]
        forced = True
    cells.sort()
    grid.mark_selected(cells)
    return cells, forced


@dataclass
class SensingInputs:
    """Everything a reselection event needs to rebuild the resource grid."""

    received: list
    timing: WindowTiming
    prfs: PrfsConfig
    now: int
    n_s: int
    advance_slots: int
    rri_ms: float = DEFAULT_RRI_MS
    min_free_fraction: float = DEFAULT_MIN_FREE_FRACTION


def on_frame_arrival(link: LinkState, scheme, inputs: SensingInputs,
                     p_rc, rng):
    """Allocation decision for one pending data frame.

    Returns ``(cells, forced, reselected)`` and updates the link state in
    place.  With RC > 0 the previous reservation is reused (advanced by the
    elapsed slots) and RC decremented; at RC = 0 the same cells are kept
    with probability ``p_rc`` (redrawing RC), otherwise sensing and
    selection produce a fresh reservation and a fresh RC.
    """
    if link.rc > 0 and link.reserved_cells:
        cells = [(s + inputs.advance_slots, c) for s, c in link.reserved_cells]
        link.reserved_cells = cells
        link.rc -= 1
        return cells, False, False

    if link.reserved_cells and p_rc > 0 and rng.random() < p_rc:
        cells = [(s + inputs.advance_slots, c) for s, c in link.reserved_cells]
        link.reserved_cells = cells
        link.rc = init_rc(inputs.rri_ms, rng)
        return cells, False, False

    link.rsrp_threshold_dbm = link.base_rsrp_threshold_dbm
    grid = collect_sensing_window(scheme, inputs.received, inputs.timing,
                                  inputs.now, inputs.prfs,
                                  threshold_dbm=link.rsrp_threshold_dbm)
    cells, forced = select_resources(grid, inputs.n_s,
                                     inputs.min_free_fraction, link, rng)
    link.reserved_cells = list(cells)
    link.rc = init_rc(inputs.rri_ms, rng)
    return cells, forced, True


def emit_sci(link: LinkState, scheme, cells, rri_ms, now):
    """Control messages announcing a reservation.

    The full scheme emits one message toward the receiver (primary) and one
    on the opposite beam (paired); the primary-only variant emits a single
    message; random allocation emits none.
    """
    scheme = Scheme(scheme)
    if not cells:
        raise ValueError("cannot announce an empty reservation")
    if scheme is Scheme.RRA:
        return []
    base = dict(sender=link.link[0], link=tuple(link.link),
                reserved_cells=tuple(cells), rri_ms=rri_ms, emitted_slot=now)
    messages = [SciMessage(direction=PRIMARY, **base)]
    if scheme is Scheme.DBRA:
        messages.append(SciMessage(direction=PAIRED, **base))
    return messages
