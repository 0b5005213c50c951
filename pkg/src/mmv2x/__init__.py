"""Slot-level simulator of standalone NR V2X Mode 2 sidelink resource
allocation at 60 GHz, with directional beamformed sensing."""

from .allocator import (LinkState, PdbViolation, ReceivedSci, ResourceGrid,
                        Scheme, SciMessage, SensingInputs, WindowTiming,
                        collect_sensing_window, emit_sci, init_rc,
                        on_frame_arrival, select_resources)
from .beams import (ArrayConfig, ChannelMatrix, Codebook, LinkBudget,
                    dft_codebook, element_gain_db, los_channel, noise_power,
                    select_sensing_codeword, select_tx_codeword, sinr_db,
                    steering_vector)
from .engine import (ConfigurationError, SimConfig, TransmissionRecord,
                     deliver_sci, detect_collisions, evaluate_sinr, run)
from .metrics import (RunSummary, collision_probability, decode_failure_rate,
                      sinr_summary, summarize, write_results)
from .phy import (PRFS_PRESETS, FrameParams, PrfsConfig, bits_per_slot,
                  resource_elements_per_slot, selection_window_capacity,
                  slot_duration, slots_needed)
from .scenario import (SCENARIO_PRESETS, ScenarioConfig, VehicleState,
                       build_scenario, distance_stats, neighbor_links,
                       step_mobility)

__version__ = "0.1.0"
