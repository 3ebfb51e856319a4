"""Synthetic radio channel: antenna lobes, log-distance path loss with
shadowing, SNR-to-rate steps, and SNR/mobility-driven loss probability.

Shadowing draws are keyed by (seed, AP id, quantized position cell) so the
field is a deterministic function of geometry, independent of call order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import ZeroDistance
from .geometry import ApDescriptor, Vec3
from .seeding import stable_normal

_SHADOW_SALT = 0x5AD0


@dataclass(frozen=True)
class AntennaPattern:
    """Two-level lobe: flat main lobe inside the beamwidth, flat back lobe outside."""

    boresight_gain_db: float = 9.0
    beamwidth_deg: float = 60.0
    back_lobe_db: float = -10.0

    def __post_init__(self):
        if not 0.0 < self.beamwidth_deg <= 360.0:
            raise ValueError(f"beamwidth_deg must be in (0, 360], got {self.beamwidth_deg}")
        if self.back_lobe_db > self.boresight_gain_db:
            raise ValueError("back_lobe_db must not exceed boresight_gain_db")

    def gain_db(self, off_boresight_deg: float) -> float:
        """Gain at an off-boresight angle in [0, 180] degrees; non-increasing."""
        if off_boresight_deg <= self.beamwidth_deg / 2.0:
            return self.boresight_gain_db
        return self.back_lobe_db

    @classmethod
    def omni(cls) -> "AntennaPattern":
        """0 dBi at all angles; the single-AP comparison baseline."""
        return cls(boresight_gain_db=0.0, beamwidth_deg=360.0, back_lobe_db=0.0)

    @classmethod
    def for_ap(cls, ap: ApDescriptor, back_lobe_db: float = -10.0) -> "AntennaPattern":
        return cls(boresight_gain_db=ap.boresight_gain_db,
                   beamwidth_deg=ap.beamwidth_deg, back_lobe_db=back_lobe_db)


@dataclass(frozen=True)
class ChannelParams:
    """Log-distance path loss with log-normal shadowing (5 GHz indoor LOS)."""

    ref_loss_db: float = 46.7          # free-space loss at 1 m
    path_loss_exponent: float = 2.2
    tx_power_dbm: float = 20.0
    noise_floor_dbm: float = -90.0
    shadowing_sigma_db: float = 2.0
    shadow_cell_m: float = 0.5         # shadowing-field quantization cell
    seed: int = 0

    def __post_init__(self):
        if not 1.5 <= self.path_loss_exponent <= 6.0:
            raise ValueError(
                f"path_loss_exponent must be in [1.5, 6], got {self.path_loss_exponent}")
        if self.shadowing_sigma_db < 0.0:
            raise ValueError("shadowing_sigma_db must be >= 0")
        if self.shadow_cell_m <= 0.0:
            raise ValueError("shadow_cell_m must be > 0")


def shadowing_db(channel: ChannelParams, ap_id: int, pos: Vec3) -> float:
    """Shadowing draw for one AP at one quantized position cell."""
    if channel.shadowing_sigma_db == 0.0:
        return 0.0
    h = channel.shadow_cell_m
    qx, qy, qz = (math.floor(pos.x / h), math.floor(pos.y / h), math.floor(pos.z / h))
    return stable_normal(channel.shadowing_sigma_db,
                         channel.seed, _SHADOW_SALT, ap_id, qx, qy, qz)


def snr_at(ap: ApDescriptor, pattern: AntennaPattern, channel: ChannelParams,
           pos: Vec3) -> float:
    """Link SNR in dB at a client position.

    tx_power + gain(angle) - (ref_loss + 10*n*log10(d)) - noise_floor
    + shadowing(ap, cell).
    """
    delta = pos - ap.position
    dist = delta.norm()
    if dist < 1e-9:
        raise ZeroDistance(f"client position coincides with AP {ap.id}")
    cos_theta = max(-1.0, min(1.0, delta.dot(ap.boresight) / dist))
    theta_deg = math.degrees(math.acos(cos_theta))
    path_loss = channel.ref_loss_db + 10.0 * channel.path_loss_exponent * math.log10(dist)
    return (channel.tx_power_dbm + pattern.gain_db(theta_deg) - path_loss
            - channel.noise_floor_dbm + shadowing_db(channel, ap.id, pos))


# -- SNR to PHY rate -----------------------------------------------------------

# 20 MHz steps anchored at (18 dB -> 15 Mbps) and (30 dB -> 45 Mbps); the
# 40 MHz table scales every rate by the observed 1.96x bandwidth factor.
_STEPS_20 = (
    (2.0, 1.0), (5.0, 3.0), (8.0, 6.0), (11.0, 9.0), (14.0, 12.0),
    (18.0, 15.0), (22.0, 22.0), (26.0, 33.0), (30.0, 45.0), (35.0, 52.0),
    (40.0, 58.0), (46.0, 65.0), (52.0, 72.0), (58.0, 80.0),
)
_BW_SCALE_40 = 1.96


@dataclass(frozen=True)
class PhyRateTable:
    """(snr threshold dB, rate Mbps) steps per bandwidth in MHz."""

    steps: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.steps:
            object.__setattr__(self, "steps", {
                20: _STEPS_20,
                40: tuple((thr, round(rate * _BW_SCALE_40, 4)) for thr, rate in _STEPS_20),
            })
        for bw, rows in self.steps.items():
            thr = [r[0] for r in rows]
            rates = [r[1] for r in rows]
            if sorted(thr) != thr or len(set(thr)) != len(thr):
                raise ValueError(f"{bw} MHz thresholds must be strictly increasing")
            if sorted(rates) != rates or len(set(rates)) != len(rates):
                raise ValueError(f"{bw} MHz rates must be strictly increasing")

    def bandwidths(self) -> list[int]:
        return sorted(self.steps)


DEFAULT_RATE_TABLE = PhyRateTable()


def phy_rate(table: PhyRateTable, snr_db: float, bandwidth_mhz: int) -> float:
    """Largest step rate whose threshold <= snr, in Mbps; 0 below the table."""
    try:
        rows = table.steps[bandwidth_mhz]
    except KeyError:
        raise ValueError(f"no rate steps for bandwidth {bandwidth_mhz} MHz") from None
    rate = 0.0
    for thr, r in rows:
        if snr_db >= thr:
            rate = r
        else:
            break
    return rate


# -- loss probability ----------------------------------------------------------

@dataclass(frozen=True)
class LossParams:
    """Step map of base loss vs SNR, plus a linear mobility penalty."""

    low_snr_db: float = 10.0
    high_snr_db: float = 20.0
    p_low: float = 0.30    # below low_snr_db
    p_mid: float = 0.05    # low_snr_db .. high_snr_db inclusive
    p_high: float = 0.01   # above high_snr_db
    k_mobility_per_mps: float = 0.005


DEFAULT_LOSS = LossParams()


def loss_prob(snr_db: float, speed: float, params: LossParams = DEFAULT_LOSS) -> float:
    """Per-packet loss probability, clamped to [0, 1]; speed in m/s."""
    if speed < 0:
        raise ValueError("speed must be >= 0")
    if snr_db < params.low_snr_db:
        base = params.p_low
    elif snr_db <= params.high_snr_db:
        base = params.p_mid
    else:
        base = params.p_high
    return min(1.0, max(0.0, base + params.k_mobility_per_mps * speed))
