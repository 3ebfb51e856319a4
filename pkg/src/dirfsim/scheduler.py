"""Downlink packet scheduling: trajectory-driven ECN marking and the AP buffer.

The marking rate is the buffer-sized rate budget for the remaining time to
the switch line: requiring (throughput) x (time to switch) = (buffer bits)
under the sqrt(2/(p+alpha)) * MSS/RTT throughput model gives

    alpha = 2 * (MSS * dt / (b * RTT))^2 - p

which is an upper bound; the applied rate is scaled down by a safety factor.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

from .errors import ZeroDenominator, ZeroSpeed
from .seeding import stable_uniform


@dataclass(frozen=True)
class SchedulerConfig:
    mss_bits: int = 11680            # 1460-byte segments
    rtt_s: float = 0.100
    buffer_bits: float = 2.5e6       # smallest buffer able to hold 25 Mbps x 100 ms
    safety_factor: float = 0.8
    marking_mode: str = "deterministic_stride"   # or seeded_random

    def __post_init__(self):
        if min(self.mss_bits, self.rtt_s, self.buffer_bits) <= 0:
            raise ValueError("mss_bits, rtt_s, and buffer_bits must be positive")
        if not 0.0 < self.safety_factor <= 1.0:
            raise ValueError("safety_factor must be in (0, 1]")
        if self.marking_mode not in ("deterministic_stride", "seeded_random"):
            raise ValueError(f"unknown marking_mode {self.marking_mode!r}")


def time_to_switch(dist_to_line_m: float, speed_mps: float) -> float:
    """Seconds until the client reaches the switch line at constant speed."""
    if speed_mps <= 0.0:
        raise ZeroSpeed("time to switch is undefined at zero speed")
    if dist_to_line_m < 0.0:
        raise ValueError("distance must be >= 0")
    return dist_to_line_m / speed_mps


def marking_rate(delta_t_s: float, cfg: SchedulerConfig, loss_p: float) -> float:
    """ECN marking rate for the remaining time to switch, clamped to [0, 1]."""
    if delta_t_s < 0.0:
        raise ValueError("delta_t must be >= 0")
    if not 0.0 <= loss_p < 1.0:
        raise ValueError("loss_p must be in [0, 1)")
    alpha_raw = 2.0 * (cfg.mss_bits * delta_t_s / (cfg.buffer_bits * cfg.rtt_s)) ** 2 - loss_p
    return min(1.0, max(0.0, cfg.safety_factor * alpha_raw))


def throughput_model(loss_p: float, alpha: float, cfg: SchedulerConfig) -> float:
    """Model throughput in bits/s: sqrt(2 / (p + alpha)) * MSS / RTT."""
    total = loss_p + alpha
    if total <= 0.0:
        raise ZeroDenominator("p + alpha must be > 0")
    return math.sqrt(2.0 / total) * cfg.mss_bits / cfg.rtt_s


def should_mark(packet_index: int, alpha: float, mode: str = "deterministic_stride",
                seed: int = 0) -> bool:
    """Whether to ECN-mark the packet with the given 1-based index.

    Stride mode marks when floor(i * alpha) increments, giving exactly the
    alpha fraction over any window; seeded_random marks independently with
    probability alpha, keyed by (seed, index) so the decision is stable.
    """
    if not 0.0 <= alpha <= 1.0:
        raise ValueError("alpha must be in [0, 1]")
    if packet_index < 1:
        raise ValueError("packet_index is 1-based")
    if mode == "deterministic_stride":
        return math.floor(packet_index * alpha) > math.floor((packet_index - 1) * alpha)
    if mode == "seeded_random":
        return stable_uniform(seed, 0xECB, packet_index) < alpha
    raise ValueError(f"unknown marking mode {mode!r}")


class MarkingStream:
    """Per-flow marking decisions under a time-varying rate.

    Stride mode integrates the rate with an accumulator (equivalent to the
    floor rule when the rate is constant); random mode draws per packet.
    """

    def __init__(self, mode: str = "deterministic_stride", seed: int = 0):
        self.mode = mode
        self.seed = seed
        self._acc = 0.0
        self._index = 0

    def mark(self, alpha: float) -> bool:
        self._index += 1
        if self.mode == "seeded_random":
            return stable_uniform(self.seed, 0xECB, self._index) < alpha
        self._acc += alpha
        if self._acc >= 1.0:
            self._acc -= 1.0
            return True
        return False


class ApBuffer:
    """Bounded FIFO of downlink packets waiting at one AP.

    Entries are (packet_id, size_bits, enqueue_time); occupancy never exceeds
    the capacity and order is preserved.
    """

    def __init__(self, capacity_bits: float):
        if capacity_bits <= 0:
            raise ValueError("capacity must be positive")
        self.capacity_bits = capacity_bits
        self._fifo: deque[tuple[int, float, float]] = deque()
        self._occupancy = 0.0

    def __len__(self) -> int:
        return len(self._fifo)

    @property
    def occupancy_bits(self) -> float:
        return self._occupancy

    def try_push(self, packet_id: int, size_bits: float, now: float) -> bool:
        """Enqueue unless the packet would overflow the capacity."""
        if self._occupancy + size_bits > self.capacity_bits:
            return False
        self._fifo.append((packet_id, size_bits, now))
        self._occupancy += size_bits
        return True

    def peek(self):
        return self._fifo[0] if self._fifo else None

    def entries(self) -> list[tuple[int, float, float]]:
        return list(self._fifo)

    def pop(self):
        entry = self._fifo.popleft()
        self._occupancy -= entry[1]
        if not self._fifo:
            self._occupancy = 0.0   # absorb float dust
        return entry

    def drain(self):
        """Remove and return every queued packet (handoff stranding)."""
        entries = list(self._fifo)
        self._fifo.clear()
        self._occupancy = 0.0
        return entries

    def drain_client(self, owner_of) -> list[tuple[int, float, float]]:
        """Remove entries whose packet belongs to the given predicate."""
        kept, removed = deque(), []
        for entry in self._fifo:
            (removed if owner_of(entry[0]) else kept).append(entry)
        self._fifo = kept
        self._occupancy = sum(e[1] for e in kept)
        return removed
