"""dirfsim: directional-AP handoff control plane with a deterministic
packet-level simulator.

Public surface: geometry and mobility primitives, the synthetic radio model,
the ranking-loss AP position estimator, direction-based AP selection, the
ECN downlink scheduler, and the scenario-driven simulation engine.
"""

from .engine import compare, run
from .errors import DirfsimError
from .estimator import ApPositionEstimator
from .geometry import (ApDescriptor, ApLayout, SwitchLine, Vec3, anchor_layout,
                       crossed_switch_line, switch_lines_for, voronoi_neighbors)
from .metrics import ClientMetrics, MetricsReport, emit_report
from .mobility import MobilityTrace, generate_trace, moving_direction
from .radio import (AntennaPattern, ChannelParams, DEFAULT_RATE_TABLE, LossParams,
                    PhyRateTable, loss_prob, phy_rate, snr_at)
from .ranking import (EstimatorConfig, SampleSet, estimate_ap_position,
                      grid_search_oracle, pair_prob_dist, pair_prob_snr,
                      rank_loss, rank_loss_gradient)
from .scenario import Scenario, load_scenario, scenario_to_yaml
from .scheduler import (ApBuffer, SchedulerConfig, marking_rate, should_mark,
                        throughput_model, time_to_switch)
from .selector import SelectionConfig, SelectorState, run_selection, select_ap

__version__ = "0.1.0"

__all__ = [
    "ApBuffer", "ApDescriptor", "ApLayout", "ApPositionEstimator",
    "AntennaPattern", "ChannelParams", "ClientMetrics", "DEFAULT_RATE_TABLE",
    "DirfsimError", "EstimatorConfig", "LossParams", "MetricsReport",
    "MobilityTrace", "PhyRateTable", "SampleSet", "Scenario", "SchedulerConfig",
    "SelectionConfig", "SelectorState", "SwitchLine", "Vec3", "anchor_layout",
    "compare", "crossed_switch_line", "emit_report", "estimate_ap_position",
    "generate_trace", "grid_search_oracle", "load_scenario", "loss_prob",
    "marking_rate", "moving_direction", "pair_prob_dist", "pair_prob_snr",
    "phy_rate", "rank_loss", "rank_loss_gradient", "run", "run_selection",
    "scenario_to_yaml", "select_ap", "should_mark", "snr_at",
    "switch_lines_for", "throughput_model", "time_to_switch",
    "voronoi_neighbors",
]
