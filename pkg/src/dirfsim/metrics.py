"""Simulation metrics and report emission (CSV/JSON, stable layout)."""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field


def sig6(x: float) -> float:
    """Round to 6 significant digits (shared by CSV and JSON emitters)."""
    if x == 0 or not math.isfinite(x):
        return x
    return float(f"{x:.6g}")


def _fmt(x) -> str:
    if isinstance(x, bool):
        return str(x).lower()
    if isinstance(x, float):
        return f"{x:.6g}"
    if x is None:
        return ""
    return str(x)


@dataclass
class ClientMetrics:
    client: int
    mean_throughput_mbps: float = 0.0
    median_throughput_mbps: float = 0.0
    cdf_samples_mbps: list[float] = field(default_factory=list)
    delivered_bits: float = 0.0
    handoff_count: int = 0
    handoff_latencies_s: list[float] = field(default_factory=list)
    retransmitted_packets: int = 0
    retransmitted_at_handoff: int = 0
    buffered_bits_at_handoff: list[float] = field(default_factory=list)
    estimation_error_m: float | None = None
    selection_accuracy: float | None = None
    selection_decisions: int = 0
    packets_sent: int = 0
    packets_delivered: int = 0
    packets_lost_channel: int = 0
    packets_dropped_buffer: int = 0
    packets_in_flight_end: int = 0

    @property
    def mean_handoff_latency_s(self) -> float:
        if not self.handoff_latencies_s:
            return 0.0
        return sum(self.handoff_latencies_s) / len(self.handoff_latencies_s)

    def conservation_holds(self) -> bool:
        return self.packets_sent == (self.packets_delivered + self.packets_lost_channel
                                     + self.packets_dropped_buffer
                                     + self.packets_in_flight_end)


@dataclass
class MetricsReport:
    mode: str = "dirf"
    seed: int = 0
    duration_s: float = 0.0
    bandwidth_mhz: int = 20
    n_aps: int = 0
    clients: list[ClientMetrics] = field(default_factory=list)

    @property
    def total_mean_throughput_mbps(self) -> float:
        return sum(c.mean_throughput_mbps for c in self.clients)

    @property
    def total_handoffs(self) -> int:
        return sum(c.handoff_count for c in self.clients)

    @property
    def total_retransmitted(self) -> int:
        return sum(c.retransmitted_packets for c in self.clients)


CSV_COLUMNS = [
    "client", "mean_throughput_mbps", "median_throughput_mbps", "delivered_bits",
    "handoff_count", "mean_handoff_latency_s", "retransmitted_packets",
    "retransmitted_at_handoff", "buffered_bits_at_handoff_total",
    "estimation_error_m", "selection_accuracy", "selection_decisions",
    "packets_sent", "packets_delivered", "packets_lost_channel",
    "packets_dropped_buffer", "packets_in_flight_end",
]


def _client_row(c: ClientMetrics) -> dict:
    return {
        "client": c.client,
        "mean_throughput_mbps": sig6(c.mean_throughput_mbps),
        "median_throughput_mbps": sig6(c.median_throughput_mbps),
        "delivered_bits": sig6(c.delivered_bits),
        "handoff_count": c.handoff_count,
        "mean_handoff_latency_s": sig6(c.mean_handoff_latency_s),
        "retransmitted_packets": c.retransmitted_packets,
        "retransmitted_at_handoff": c.retransmitted_at_handoff,
        "buffered_bits_at_handoff_total": sig6(sum(c.buffered_bits_at_handoff)),
        "estimation_error_m": None if c.estimation_error_m is None else sig6(c.estimation_error_m),
        "selection_accuracy": None if c.selection_accuracy is None else sig6(c.selection_accuracy),
        "selection_decisions": c.selection_decisions,
        "packets_sent": c.packets_sent,
        "packets_delivered": c.packets_delivered,
        "packets_lost_channel": c.packets_lost_channel,
        "packets_dropped_buffer": c.packets_dropped_buffer,
        "packets_in_flight_end": c.packets_in_flight_end,
    }


def report_to_csv(report: MetricsReport) -> str:
    lines = [",".join(CSV_COLUMNS)]
    for c in report.clients:
        row = _client_row(c)
        lines.append(",".join(_fmt(row[col]) for col in CSV_COLUMNS))
    return "\n".join(lines) + "\n"


def report_to_json(report: MetricsReport) -> str:
    doc = {
        "scenario": {
            "mode": report.mode,
            "seed": report.seed,
            "duration_s": sig6(report.duration_s),
            "bandwidth_mhz": report.bandwidth_mhz,
            "n_aps": report.n_aps,
        },
        "aggregate": {
            "total_mean_throughput_mbps": sig6(report.total_mean_throughput_mbps),
            "total_handoffs": report.total_handoffs,
            "total_retransmitted": report.total_retransmitted,
        },
        "clients": [],
    }
    for c in report.clients:
        row = _client_row(c)
        row["handoff_latencies_s"] = [sig6(v) for v in c.handoff_latencies_s]
        row["buffered_bits_at_handoff"] = [sig6(v) for v in c.buffered_bits_at_handoff]
        row["cdf_samples_mbps"] = [sig6(v) for v in c.cdf_samples_mbps]
        doc["clients"].append(row)
    return json.dumps(doc, indent=2, sort_keys=False) + "\n"


def emit_report(report: MetricsReport, out_dir: str, formats=("csv", "json"),
                basename: str = "summary", packet_log: list | None = None) -> list[str]:
    """Write summary files (and an optional per-packet trace); returns paths."""
    os.makedirs(out_dir, exist_ok=True)
    written = []
    for fmt in formats:
        path = os.path.join(out_dir, f"{basename}.{fmt}")
        if fmt == "csv":
            payload = report_to_csv(report)
        elif fmt == "json":
            payload = report_to_json(report)
        else:
            raise ValueError(f"unknown report format {fmt!r}")
        tmp = path + ".tmp"
        with open(tmp, "w") as fh:
            fh.write(payload)
        os.replace(tmp, path)
        written.append(path)
    if packet_log is not None:
        path = os.path.join(out_dir, "packets.csv")
        with open(path + ".tmp", "w") as fh:
            fh.write("t,event,client,packet,bits,ap,marked\n")
            for row in packet_log:
                fh.write(",".join(_fmt(v) for v in row) + "\n")
        os.replace(path + ".tmp", path)
        written.append(path)
    return written
