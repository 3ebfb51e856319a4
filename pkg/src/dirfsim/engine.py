"""Deterministic packet-level simulator.

One strictly single-threaded event loop per scenario: clients move along
their traces at 10 Hz position reports, a bulk server per client pushes
downlink packets through the controller into the serving AP's FIFO buffer,
and the AP drains the buffer at the SNR-driven PHY rate. Handoffs follow the
direction-based selector (or a greedy-SNR baseline); the trajectory-driven
ECN marking makes the server back off so buffers drain before a switch.

Determinism: every random draw is keyed by (scenario seed, purpose, entity),
never by event order, and event ties break by insertion sequence.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, replace

from .errors import MismatchedScenarios
from .geometry import ApLayout, Vec3, anchor_layout
from .metrics import ClientMetrics, MetricsReport
from .mobility import MobilityTrace, generate_trace
from .radio import (AntennaPattern, DEFAULT_RATE_TABLE, loss_prob, phy_rate, snr_at)
from .ranking import EstimatorConfig, SampleSet
from .scenario import Scenario, build_layout, effective_room, omni_layout, scenario_to_dict
from .scheduler import ApBuffer, MarkingStream, marking_rate
from .seeding import stable_uniform, substream
from .selector import SelectorState, select_ap
from .geometry import crossed_switch_line, switch_lines_for
from .ranking import estimate_ap_position

# event kinds (heap entries are (time, seq, kind, a, b))
_SEND, _DELIVER, _REPORT, _ECHO, _RETX, _HODONE = range(6)

_LOSS_SALT = 0x10C55
_MIN_RATE_BPS = 1e4


class _Flow:
    __slots__ = (
        "idx", "tcp", "packet_bits", "data_end", "trace", "current_ap",
        "initial_ap", "blackout_until", "handoff_start_t", "rate", "cap",
        "clamped", "episode_until", "retx_queue", "send_armed", "marking",
        "alpha", "sent", "delivered", "lost_channel", "dropped_buffer",
        "retransmitted", "retransmitted_at_handoff", "delivered_bits",
        "window_bits", "samples_pos", "samples_snr", "estimate_done",
        "anchored", "est_error", "decisions", "last_delivery_t",
        "await_delivery", "handoff_gap_from", "prev_pos", "pos", "speed",
        "snr", "phy_bps", "p_loss", "buffered_at_handoff", "latencies",
        "offered_rate",
    )

    def __init__(self, idx: int, tcp: bool, packet_bits: int, data_end: float,
                 trace: MobilityTrace, initial_ap: int, n_windows: int):
        self.idx = idx
        self.tcp = tcp
        self.packet_bits = packet_bits
        self.data_end = data_end
        self.trace = trace
        self.current_ap = initial_ap
        self.initial_ap = initial_ap
        self.blackout_until = -1.0
        self.handoff_start_t = 0.0
        self.rate = _MIN_RATE_BPS
        self.cap = _MIN_RATE_BPS
        self.clamped = False
        self.episode_until = -1.0
        self.retx_queue = []
        self.send_armed = False
        self.marking = None
        self.alpha = 0.0
        self.sent = 0
        self.delivered = 0
        self.lost_channel = 0
        self.dropped_buffer = 0
        self.retransmitted = 0
        self.retransmitted_at_handoff = 0
        self.delivered_bits = 0.0
        self.window_bits = [0.0] * n_windows
        self.samples_pos = []
        self.samples_snr = []
        self.estimate_done = False
        self.anchored = None
        self.est_error = None
        self.decisions = []          # (t, from_ap, to_ap, truth)
        self.last_delivery_t = None
        self.await_delivery = False
        self.handoff_gap_from = None
        self.prev_pos = None
        self.pos = None
        self.speed = 0.0
        self.snr = 0.0
        self.phy_bps = 0.0
        self.p_loss = 0.0
        self.buffered_at_handoff = []
        self.latencies = []
        self.offered_rate = None     # constant source rate for udp flows


class _ApState:
    __slots__ = ("ap", "pattern", "buffer", "busy", "clients", "lines")

    def __init__(self, ap, pattern, capacity_bits, lines):
        self.ap = ap
        self.pattern = pattern
        self.buffer = ApBuffer(capacity_bits)
        self.busy = None             # packet id in the air, if any
        self.clients = set()
        self.lines = lines


@dataclass
class CompareSeedRow:
    seed: int
    throughput_a_mbps: float
    throughput_b_mbps: float
    ratio: float


@dataclass
class CompareReport:
    rows: list[CompareSeedRow]
    mean_ratio: float
    handoffs: tuple[float, float]
    retransmitted: tuple[float, float]


def _build_trace(sc: Scenario, idx: int, layout: ApLayout) -> MobilityTrace:
    tr = sc.clients[idx].trace
    if tr.kind == "points":
        times = [row[0] for row in tr.points]
        pts = [Vec3(row[1], row[2], row[3]) for row in tr.points]
        return MobilityTrace(times, pts)
    room = effective_room(sc)
    bounds = (room.x, room.y)
    rng = substream(sc.seed, 0x7261CE, idx)
    kwargs = dict(client_height=sc.client_height_m, bounds=bounds, rng=rng)
    if tr.kind == "cell_waypoint":
        from .mobility import generate_cell_waypoint
        return generate_cell_waypoint(layout, tr.cell, tr.speed_mps, sc.duration_s, **kwargs)
    return generate_trace(tr.kind, layout, tr.speed_mps, sc.seed, sc.duration_s, **kwargs)


class _Sim:
    def __init__(self, sc: Scenario, packet_log: bool = False):
        self.sc = sc
        # clients move through the declared geometry in both modes; only the
        # radio plant changes under the omni baseline
        self.mobility_layout = build_layout(sc)
        self.layout = omni_layout(sc) if sc.mode == "omrf" else self.mobility_layout
        self.duration = sc.duration_s
        self.table = DEFAULT_RATE_TABLE
        self.heap = []
        self.seq = 0
        self.pkt_counter = 0
        self.registry = {}           # pkt -> [flow_idx, bits, marked, send_t, canceled]
        self._retx_meta = {}         # pkt -> (bits, handoff_caused) awaiting RTO
        self.packet_log = [] if packet_log else None

        self.aps = {}
        back_lobe = sc.antenna.back_lobe_db
        for ap in self.layout.aps:
            if sc.mode == "omrf":
                pattern = AntennaPattern.omni()
            else:
                pattern = AntennaPattern.for_ap(ap, back_lobe_db=back_lobe)
            lines = switch_lines_for(self.layout, ap.id)
            self.aps[ap.id] = _ApState(ap, pattern, sc.scheduler.buffer_bits, lines)

        n_windows = max(1, int(math.ceil(self.duration - 1e-9)))
        self.flows = []
        for i, client in enumerate(sc.clients):
            trace = _build_trace(sc, i, self.mobility_layout)
            initial = self.layout.nearest_ap(trace.points[0])
            data_end = client.workload.duration_s
            if data_end is None:
                data_end = self.duration
            flow = _Flow(i, client.workload.kind == "tcp", client.workload.packet_bits,
                         data_end, trace, initial, n_windows)
            flow.marking = MarkingStream(sc.scheduler.marking_mode, seed=sc.seed * 1000 + i)
            if not flow.tcp:
                offered = client.workload.offered_mbps
                if offered is None:
                    top = max(r for _, r in self.table.steps[sc.bandwidth_mhz])
                    offered = 1.1 * top
                flow.offered_rate = offered * 1e6
                flow.rate = flow.offered_rate
            self.aps[initial].clients.add(i)
            self.flows.append(flow)

        for flow in self.flows:
            for t in flow.trace.times:
                if t <= self.duration:
                    self._push(t, _REPORT, flow.idx, 0)
            self._push(0.0, _SEND, flow.idx, 0)
            flow.send_armed = True

    # -- plumbing --------------------------------------------------------------

    def _push(self, t, kind, a, b):
        heapq.heappush(self.heap, (t, self.seq, kind, a, b))
        self.seq += 1

    def _log(self, t, event, flow_idx, pkt, bits, ap_id, marked):
        if self.packet_log is not None:
            self.packet_log.append((f"{t:.6f}", event, flow_idx, pkt, bits, ap_id,
                                    1 if marked else 0))

    # -- radio shortcuts ---------------------------------------------------------

    def _snr(self, ap_state: _ApState, pos: Vec3) -> float:
        return snr_at(ap_state.ap, ap_state.pattern, self.sc.channel, pos)

    def _phy_bps(self, snr: float) -> float:
        return phy_rate(self.table, snr, self.sc.bandwidth_mhz) * 1e6

    # -- event handlers ----------------------------------------------------------

    def run(self) -> MetricsReport:
        horizon = self.duration + 1e-12
        heap = self.heap
        while heap and heap[0][0] <= horizon:
            t, _, kind, a, b = heapq.heappop(heap)
            if kind == _SEND:
                self._on_send(t, self.flows[a])
            elif kind == _DELIVER:
                self._on_deliver(t, a, b)
            elif kind == _REPORT:
                self._on_report(t, self.flows[a])
            elif kind == _ECHO:
                self._on_echo(t, self.flows[a])
            elif kind == _RETX:
                self._on_retx_ready(t, self.flows[a], b)
            elif kind == _HODONE:
                self._on_handoff_done(t, self.flows[a])
        return self._assemble()

    def _on_send(self, t, flow: _Flow):
        handoff_caused = False
        if flow.retx_queue:
            bits, handoff_caused = flow.retx_queue.pop(0)
            flow.retransmitted += 1
            if handoff_caused:
                flow.retransmitted_at_handoff += 1
        elif t < flow.data_end:
            bits = flow.packet_bits
        else:
            flow.send_armed = False
            return
        marked = False
        if self.sc.scheduler_enabled and flow.tcp:
            marked = flow.marking.mark(flow.alpha)
        pkt = self.pkt_counter
        self.pkt_counter += 1
        self.registry[pkt] = [flow.idx, bits, marked, t, False]
        flow.sent += 1
        ap = self.aps[flow.current_ap]
        if ap.buffer.try_push(pkt, bits, t):
            self._log(t, "enqueue", flow.idx, pkt, bits, ap.ap.id, marked)
            self._kick(ap, t)
        else:
            flow.dropped_buffer += 1
            self._log(t, "drop", flow.idx, pkt, bits, ap.ap.id, marked)
            self._lose(pkt, t, handoff_caused=False, bucket=None)
        self._push(t + bits / flow.rate, _SEND, flow.idx, 0)

    def _lose(self, pkt, t, handoff_caused, bucket):
        """Terminal loss handling: optional bucket count, then retransmission."""
        info = self.registry.pop(pkt)
        flow = self.flows[info[0]]
        if bucket == "channel":
            flow.lost_channel += 1
        if flow.tcp:
            when = max(info[3] + self.sc.rto_s, t)
            self._push(when, _RETX, flow.idx, pkt)
            # stash what the retransmission needs; registry entry is gone
            self._retx_meta[pkt] = (info[1], handoff_caused)

    def _on_retx_ready(self, t, flow: _Flow, pkt):
        bits, handoff_caused = self._retx_meta.pop(pkt)
        flow.retx_queue.append((bits, handoff_caused))
        if not flow.send_armed:
            flow.send_armed = True
            self._push(t, _SEND, flow.idx, 0)

    def _kick(self, ap: _ApState, t):
        if ap.busy is not None:
            return
        head = ap.buffer.peek()
        if head is None:
            return
        pkt, bits, _ = head
        flow = self.flows[self.registry[pkt][0]]
        if t < flow.blackout_until:
            return                   # head-of-line client mid-handoff
        if flow.phy_bps <= 0.0:
            return                   # below the rate table; wait for a report
        airtime = bits / flow.phy_bps
        if len(ap.clients) >= 2:
            airtime *= 1.1           # contention overhead when the AP is shared
        ap.buffer.pop()
        ap.busy = pkt
        self._push(t + airtime, _DELIVER, pkt, ap.ap.id)

    def _on_deliver(self, t, pkt, ap_id):
        ap = self.aps[ap_id]
        ap.busy = None
        info = self.registry[pkt]
        flow = self.flows[info[0]]
        bits, marked = info[1], info[2]
        if info[4]:                  # canceled by a handoff mid-flight
            self._log(t, "lost_handoff", flow.idx, pkt, bits, ap_id, marked)
            self._lose(pkt, t, handoff_caused=True, bucket="channel")
        else:
            u = stable_uniform(self.sc.seed, _LOSS_SALT, pkt)
            if u < flow.p_loss:
                self._log(t, "lost", flow.idx, pkt, bits, ap_id, marked)
                self._lose(pkt, t, handoff_caused=False, bucket="channel")
            else:
                del self.registry[pkt]
                flow.delivered += 1
                flow.delivered_bits += bits
                idx = min(int(t), len(flow.window_bits) - 1)
                flow.window_bits[idx] += bits
                if flow.await_delivery and t >= flow.blackout_until:
                    start = flow.handoff_gap_from
                    if start is None:
                        start = flow.handoff_start_t
                    flow.latencies.append(t - start)
                    flow.await_delivery = False
                flow.last_delivery_t = t
                self._log(t, "deliver", flow.idx, pkt, bits, ap_id, marked)
                if marked:
                    self._push(t + self.sc.scheduler.rtt_s / 2.0, _ECHO, flow.idx, 0)
        self._kick(ap, t)

    def _on_echo(self, t, flow: _Flow):
        if not flow.tcp:
            return
        flow.clamped = True
        flow.episode_until = t + self.sc.server.ecn_hold_s
        flow.rate = max(self.sc.server.ecn_rate_factor * flow.phy_bps, _MIN_RATE_BPS)

    def _on_handoff_done(self, t, flow: _Flow):
        flow.clamped = False
        flow.rate = flow.cap if flow.tcp else flow.offered_rate
        self._kick(self.aps[flow.current_ap], t)

    # -- position reports ----------------------------------------------------------

    def _on_report(self, t, flow: _Flow):
        pos = flow.trace.position_at(t)
        flow.pos = pos
        flow.speed = flow.trace.speed_at(t)
        ap = self.aps[flow.current_ap]
        flow.snr = self._snr(ap, pos)
        flow.phy_bps = self._phy_bps(flow.snr)
        flow.p_loss = loss_prob(flow.snr, flow.speed, self.sc.loss)
        if flow.tcp:
            flow.cap = max(self.sc.server.backhaul_factor * flow.phy_bps, _MIN_RATE_BPS)
            if flow.clamped and t < flow.episode_until:
                flow.rate = max(self.sc.server.ecn_rate_factor * flow.phy_bps, _MIN_RATE_BPS)
            else:
                flow.clamped = False
                flow.rate = flow.cap

        self._update_alpha(t, flow, ap)

        if len(self.layout) > 1 and t >= flow.blackout_until:
            if self.sc.selector.policy == "greedy_snr":
                self._greedy_check(t, flow, pos)
            else:
                if not flow.estimate_done and self.sc.selector.estimation == "estimated":
                    flow.samples_pos.append(pos.as_tuple())
                    flow.samples_snr.append(flow.snr)
                self._crossing_check(t, flow, pos)
        flow.prev_pos = pos
        self._kick(self.aps[flow.current_ap], t)

    def _update_alpha(self, t, flow: _Flow, ap: _ApState):
        flow.alpha = 0.0
        if not (self.sc.scheduler_enabled and flow.tcp and ap.lines):
            return
        if flow.speed <= 1e-9 or t < flow.blackout_until:
            return
        d = min(abs(line.signed_distance(flow.pos)) for line in ap.lines)
        delta_t = d / flow.speed
        p = self.sc.server.marking_loss_p
        if p is None:
            p = min(flow.p_loss, 1.0 - 1e-9)
        flow.alpha = marking_rate(delta_t, self.sc.scheduler, p)

    def _greedy_check(self, t, flow: _Flow, pos: Vec3):
        best_id, best_snr = None, -math.inf
        for ap_id in self.layout.ids():
            s = self._snr(self.aps[ap_id], pos)
            if s > best_snr + 1e-12:
                best_id, best_snr = ap_id, s
        if best_id != flow.current_ap:
            truth = self.layout.nearest_ap(pos)
            flow.decisions.append((t, flow.current_ap, best_id, truth))
            self._start_handoff(t, flow, best_id)

    def _crossing_check(self, t, flow: _Flow, pos: Vec3):
        if flow.prev_pos is None:
            return
        lines = self.aps[flow.current_ap].lines
        hit, hit_s = None, math.inf
        for line in lines:
            if crossed_switch_line(line, flow.prev_pos, pos):
                pd = line.signed_distance(flow.prev_pos)
                cd = line.signed_distance(pos)
                s = pd / (pd - cd) if cd != pd else 0.0
                if s < hit_s:
                    hit, hit_s = line, s
        if hit is None:
            return
        if flow.anchored is None:
            self._anchor(flow)
        window = self.sc.selector.direction_window_s
        t_from = max(flow.trace.start_time, t - window)
        direction = flow.trace.position_at(t) - flow.trace.position_at(t_from)
        if direction.norm() < 1e-12:
            direction = pos - flow.prev_pos
        state = SelectorState(current_ap=flow.current_ap,
                              anchored_positions=flow.anchored,
                              ap_ids=self.layout.ids(),
                              mode=self.sc.selector.mode,
                              direction_window_s=window)
        chosen = select_ap(direction, pos, state)
        flow.decisions.append((t, flow.current_ap, chosen, hit.neighbor_ap))
        if chosen != flow.current_ap:
            self._start_handoff(t, flow, chosen)

    def _anchor(self, flow: _Flow):
        layout = self.layout
        true_pos = layout.by_id(flow.initial_ap).position
        if self.sc.selector.estimation == "exact":
            est = true_pos
        else:
            cfg = self.sc.estimator
            samples = SampleSet.from_db(flow.samples_pos, flow.samples_snr,
                                        scale=cfg.snr_scale)
            result = estimate_ap_position(samples, EstimatorConfig(
                learning_rate=cfg.learning_rate, max_iters=cfg.max_iters,
                grad_tol=cfg.grad_tol, pair_strategy=cfg.pair_strategy,
                pair_seed=self.sc.seed, snr_scale=cfg.snr_scale))
            est = result.position
            flow.est_error = est.distance_to(true_pos)
        idx = layout.index_of(flow.initial_ap)
        ap0_anchor = est - layout.relative_offsets[idx]
        flow.anchored = anchor_layout(layout, ap0_anchor)
        flow.estimate_done = True

    def _start_handoff(self, t, flow: _Flow, new_ap_id: int):
        old = self.aps[flow.current_ap]
        mine = lambda pkt: self.registry[pkt][0] == flow.idx
        stranded = old.buffer.drain_client(mine)
        flow.buffered_at_handoff.append(sum(e[1] for e in stranded))
        for pkt, bits, _ in stranded:
            self._log(t, "stranded", flow.idx, pkt, bits, old.ap.id,
                      self.registry[pkt][2])
            self._lose(pkt, t, handoff_caused=True, bucket="channel")
        if old.busy is not None and self.registry[old.busy][0] == flow.idx:
            self.registry[old.busy][4] = True   # cancel mid-flight delivery
        old.clients.discard(flow.idx)
        new = self.aps[new_ap_id]
        new.clients.add(flow.idx)
        flow.current_ap = new_ap_id
        flow.handoff_start_t = t
        flow.handoff_gap_from = flow.last_delivery_t
        flow.await_delivery = True
        flow.blackout_until = t + self.sc.switch_latency_s
        flow.clamped = False
        # serving geometry changed; refresh the link state for the new AP
        flow.snr = self._snr(new, flow.pos)
        flow.phy_bps = self._phy_bps(flow.snr)
        flow.p_loss = loss_prob(flow.snr, flow.speed, self.sc.loss)
        if flow.tcp:
            flow.cap = max(self.sc.server.backhaul_factor * flow.phy_bps, _MIN_RATE_BPS)
            flow.rate = flow.cap
        self._push(t + self.sc.switch_latency_s, _HODONE, flow.idx, 0)

    # -- final assembly --------------------------------------------------------

    def _assemble(self) -> MetricsReport:
        in_flight = [0] * len(self.flows)
        for ap in self.aps.values():
            for pkt, _, _ in ap.buffer.entries():
                in_flight[self.registry[pkt][0]] += 1
            if ap.busy is not None:
                in_flight[self.registry[ap.busy][0]] += 1
        report = MetricsReport(mode=self.sc.mode, seed=self.sc.seed,
                               duration_s=self.duration,
                               bandwidth_mhz=self.sc.bandwidth_mhz,
                               n_aps=len(self.layout))
        for flow in self.flows:
            cm = ClientMetrics(client=flow.idx)
            windows = []
            for i, bits in enumerate(flow.window_bits):
                length = min(1.0, self.duration - i)
                if length > 1e-12:
                    windows.append(bits / length / 1e6)
            cm.cdf_samples_mbps = sorted(windows)
            cm.delivered_bits = flow.delivered_bits
            cm.mean_throughput_mbps = flow.delivered_bits / self.duration / 1e6
            if windows:
                mid = sorted(windows)
                n = len(mid)
                cm.median_throughput_mbps = (mid[n // 2] if n % 2 else
                                             (mid[n // 2 - 1] + mid[n // 2]) / 2.0)
            cm.handoff_count = sum(1 for d in flow.decisions if d[1] != d[2])
            cm.handoff_latencies_s = flow.latencies
            cm.retransmitted_packets = flow.retransmitted
            cm.retransmitted_at_handoff = flow.retransmitted_at_handoff
            cm.buffered_bits_at_handoff = flow.buffered_at_handoff
            cm.estimation_error_m = flow.est_error
            cm.selection_decisions = len(flow.decisions)
            if flow.decisions:
                matches = sum(1 for d in flow.decisions if d[2] == d[3])
                cm.selection_accuracy = matches / len(flow.decisions)
            cm.packets_sent = flow.sent
            cm.packets_delivered = flow.delivered
            cm.packets_lost_channel = flow.lost_channel
            cm.packets_dropped_buffer = flow.dropped_buffer
            cm.packets_in_flight_end = in_flight[flow.idx]
            if not cm.conservation_holds():
                raise AssertionError(
                    f"conservation violated for client {flow.idx}: "
                    f"sent={cm.packets_sent} delivered={cm.packets_delivered} "
                    f"lost={cm.packets_lost_channel} dropped={cm.packets_dropped_buffer} "
                    f"in_flight={cm.packets_in_flight_end}")
            report.clients.append(cm)
        return report


def run(scenario: Scenario, packet_log: bool = False):
    """Simulate one scenario; returns the metrics report (and the packet log
    when requested)."""
    sim = _Sim(scenario, packet_log=packet_log)
    report = sim.run()
    if packet_log:
        return report, sim.packet_log
    return report


def compare(dirf: Scenario, omrf: Scenario, seeds=None) -> CompareReport:
    """Run two scenarios differing only in mode over a shared seed set."""
    a, b = scenario_to_dict(dirf), scenario_to_dict(omrf)
    a.pop("mode"), b.pop("mode")
    if a != b:
        diff = [k for k in a if a[k] != b[k]]
        raise MismatchedScenarios(f"scenarios differ beyond mode: {diff}")
    if seeds is None:
        seeds = [dirf.seed]
    rows = []
    handoffs = [0.0, 0.0]
    retx = [0.0, 0.0]
    for seed in seeds:
        ra = run(replace(dirf, seed=seed))
        rb = run(replace(omrf, seed=seed))
        ta, tb = ra.total_mean_throughput_mbps, rb.total_mean_throughput_mbps
        rows.append(CompareSeedRow(seed, ta, tb, ta / tb if tb > 0 else math.inf))
        handoffs[0] += ra.total_handoffs
        handoffs[1] += rb.total_handoffs
        retx[0] += ra.total_retransmitted
        retx[1] += rb.total_retransmitted
    mean_ratio = sum(r.ratio for r in rows) / len(rows)
    k = float(len(seeds))
    return CompareReport(rows, mean_ratio, (handoffs[0] / k, handoffs[1] / k),
                         (retx[0] / k, retx[1] / k))
