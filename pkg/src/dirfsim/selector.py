"""Direction-based AP selection and trace replay.

At a switch-line crossing the next AP is the one whose displacement from the
client best matches the client's moving direction. Two scoring modes exist:

  relative (default)  argmin_i || direction - (p_i - client) ||^2 -- the
                      selection rule evaluated in the client-centered frame,
                      trading off heading alignment against AP distance
  literal             argmin_i || direction - p_i ||^2 against absolute AP
                      positions, kept for frame-dependent replication

Ties break toward the lowest AP id, so selection is a deterministic total
function. Cost is one score per AP per decision.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import ZeroDirection
from .geometry import ApLayout, Vec3, anchor_layout, crossed_switch_line, switch_lines_for
from .mobility import MobilityTrace, moving_direction
from .ranking import EstimatorConfig, SampleSet, estimate_ap_position

DEFAULT_DIRECTION_WINDOW_S = 1.0


@dataclass(frozen=True)
class SelectorState:
    """Per-client selection state: serving AP and anchored AP positions."""

    current_ap: int
    anchored_positions: list[Vec3]
    ap_ids: list[int]
    mode: str = "relative"                       # relative | literal
    direction_window_s: float = DEFAULT_DIRECTION_WINDOW_S

    def __post_init__(self):
        if self.mode not in ("relative", "literal"):
            raise ValueError(f"unknown selector mode {self.mode!r}")
        if len(self.anchored_positions) != len(self.ap_ids):
            raise ValueError("anchored_positions must cover every AP")
        if self.current_ap not in self.ap_ids:
            raise ValueError(f"current_ap {self.current_ap} not in layout")


def selection_scores(direction: Vec3, client_pos: Vec3,
                     state: SelectorState) -> list[float]:
    """One score per AP (lower is better); exactly |A| comparisons."""
    if direction.norm() <= 0.0:
        raise ZeroDirection("moving direction must be non-zero")
    scores = []
    for pos in state.anchored_positions:
        if state.mode == "literal":
            delta = direction - pos
        else:
            delta = direction - (pos - client_pos)
        scores.append(delta.dot(delta))
    return scores


def select_ap(direction: Vec3, client_pos: Vec3, state: SelectorState) -> int:
    """Best AP id for the given moving direction; lowest id wins ties."""
    scores = selection_scores(direction, client_pos, state)
    best_i = 0
    best = scores[0]
    for i in range(1, len(scores)):
        if scores[i] < best:
            best, best_i = scores[i], i
    return state.ap_ids[best_i]


@dataclass(frozen=True)
class Decision:
    time: float
    from_ap: int
    to_ap: int
    geometric_truth: int     # neighbor across the crossed switch line


@dataclass(frozen=True)
class SelectionConfig:
    mode: str = "relative"
    direction_window_s: float = DEFAULT_DIRECTION_WINDOW_S
    estimator: EstimatorConfig = field(default_factory=EstimatorConfig)
    exact_estimation: bool = False   # anchor on the true position (bypass the estimator)


@dataclass(frozen=True)
class SelectionRun:
    decisions: list[Decision]
    anchor_estimate: Vec3 | None     # estimated position of the initial AP
    estimation_error_m: float | None


def run_selection(trace: MobilityTrace, layout: ApLayout, samples: SampleSet | None,
                  cfg: SelectionConfig = SelectionConfig(), *,
                  initial_ap: int | None = None) -> SelectionRun:
    """Replay a trace, emitting one selection decision per switch-line crossing.

    The position estimate runs once, at the first crossing, and its anchor is
    reused for every later decision (the inter-AP geometry makes
    re-estimation redundant). A single-AP layout yields no decisions.
    """
    start = trace.points[0]
    if initial_ap is None:
        initial_ap = layout.nearest_ap(start)
    elif layout.nearest_ap(start) != initial_ap:
        raise ValueError(
            f"trace starts outside AP {initial_ap}'s cell "
            f"(nearest is AP {layout.nearest_ap(start)})")

    if len(layout) == 1:
        return SelectionRun([], None, None)

    current = initial_ap
    lines = switch_lines_for(layout, current)
    anchored: list[Vec3] | None = None
    anchor_estimate = None
    est_error = None
    decisions: list[Decision] = []

    for i in range(1, len(trace.times)):
        prev_p, cur_p = trace.points[i - 1], trace.points[i]
        hit = None
        for line in lines:
            if crossed_switch_line(line, prev_p, cur_p):
                # first plane pierced along the step wins
                prev_d = line.signed_distance(prev_p)
                cur_d = line.signed_distance(cur_p)
                s = prev_d / (prev_d - cur_d) if cur_d != prev_d else 0.0
                if hit is None or s < hit[1]:
                    hit = (line, s)
        if hit is None:
            continue
        line, _ = hit
        t = trace.times[i]

        if anchored is None:
            true_anchor = layout.by_id(initial_ap).position
            if cfg.exact_estimation or samples is None:
                est = true_anchor
            else:
                est = estimate_ap_position(samples, cfg.estimator).position
                est_error = est.distance_to(true_anchor)
            anchor_estimate = est
            # anchor AP 0 so that the initially-associated AP lands on the estimate
            idx0 = layout.index_of(initial_ap)
            ap0_anchor = est - layout.relative_offsets[idx0]
            anchored = anchor_layout(layout, ap0_anchor)

        t_from = max(trace.start_time, t - cfg.direction_window_s)
        direction = moving_direction(trace, t_from, t)
        state = SelectorState(current_ap=current, anchored_positions=anchored,
                              ap_ids=layout.ids(), mode=cfg.mode,
                              direction_window_s=cfg.direction_window_s)
        chosen = select_ap(direction, cur_p, state)
        decisions.append(Decision(time=t, from_ap=current, to_ap=chosen,
                                  geometric_truth=line.neighbor_ap))
        if chosen != current:
            current = chosen
            lines = switch_lines_for(layout, current)

    return SelectionRun(decisions, anchor_estimate, est_error)
