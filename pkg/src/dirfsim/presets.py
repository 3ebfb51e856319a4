"""Bundled scenario presets, one per benchmark experiment.

Each builder returns a fully-validated Scenario; write_all() materializes
them as YAML files for CLI use.
"""

from __future__ import annotations

import os
from dataclasses import replace

from .scenario import (ClientConfig, GridLayoutConfig, RoomConfig, Scenario,
                       SelectorPolicyConfig, TraceConfig, WorkloadConfig,
                       scenario_to_yaml, validate_scenario)

MODERATE_WALK_MPS = 1.4    # about 3.13 mph
SLOW_WALK_MPS = 0.8        # about 1.79 mph
FAST_WALK_MPS = 2.0        # about 4.47 mph

# cells used to spread multi-client workloads across distinct APs
_SPREAD_CELLS = (0, 5, 2, 3, 4, 1)


def tour_scenario(seed: int = 1, *, scheduler_enabled: bool = True,
                  policy: str = "direction", estimation: str = "estimated",
                  bandwidth_mhz: int = 20, speed: float = MODERATE_WALK_MPS,
                  duration_s: float = 32.0, workload: str = "tcp") -> Scenario:
    """Single client wanders the first cell, then tours every cell in order."""
    sc = Scenario(
        seed=seed,
        bandwidth_mhz=bandwidth_mhz,
        duration_s=duration_s,
        scheduler_enabled=scheduler_enabled,
        selector=SelectorPolicyConfig(policy=policy, estimation=estimation),
        clients=(ClientConfig(trace=TraceConfig(kind="tour", speed_mps=speed),
                              workload=WorkloadConfig(kind=workload)),),
    )
    validate_scenario(sc)
    return sc


def multi_client_scenario(n_clients: int, seed: int = 1, *, mode: str = "dirf",
                          bandwidth_mhz: int = 20, duration_s: float = 15.0,
                          workload: str = "tcp") -> Scenario:
    """n clients roaming distinct AP cells; the baseline shares one omni AP."""
    if not 1 <= n_clients <= len(_SPREAD_CELLS):
        raise ValueError(f"n_clients must be in [1, {len(_SPREAD_CELLS)}]")
    clients = tuple(
        ClientConfig(trace=TraceConfig(kind="cell_waypoint", speed_mps=1.0,
                                       cell=_SPREAD_CELLS[k]),
                     workload=WorkloadConfig(kind=workload))
        for k in range(n_clients))
    sc = Scenario(seed=seed, mode=mode, bandwidth_mhz=bandwidth_mhz,
                  duration_s=duration_s, clients=clients,
                  selector=SelectorPolicyConfig(estimation="exact"))
    validate_scenario(sc)
    return sc


def density_scenario(n_aps: int, seed: int = 1, *, bandwidth_mhz: int = 20,
                     duration_s: float = 15.0, workload: str = "tcp") -> Scenario:
    """One roaming client in a fixed room covered by a 2/4/6-AP grid."""
    shapes = {2: (1, 2), 4: (2, 2), 6: (2, 3)}
    if n_aps not in shapes:
        raise ValueError(f"n_aps must be one of {sorted(shapes)}")
    rows, cols = shapes[n_aps]
    sc = Scenario(
        seed=seed, bandwidth_mhz=bandwidth_mhz, duration_s=duration_s,
        layout=GridLayoutConfig(rows=rows, cols=cols, spacing_m=None),
        room=RoomConfig(x=(0.0, 15.0), y=(0.0, 10.0)),
        selector=SelectorPolicyConfig(estimation="exact"),
        clients=(ClientConfig(trace=TraceConfig(kind="random_waypoint", speed_mps=1.0),
                              workload=WorkloadConfig(kind=workload)),),
    )
    validate_scenario(sc)
    return sc


def static_scenario(seed: int = 1, *, duration_s: float = 10.0,
                    position=(2.5, 2.5, 1.0), workload: str = "tcp") -> Scenario:
    """One stationary client under the first AP (closed-form throughput check)."""
    x, y, z = position
    pts = ((0.0, x, y, z), (duration_s, x, y, z))
    sc = Scenario(
        seed=seed, duration_s=duration_s,
        clients=(ClientConfig(trace=TraceConfig(kind="points", points=pts),
                              workload=WorkloadConfig(kind=workload)),),
    )
    validate_scenario(sc)
    return sc


def omrf_variant(sc: Scenario) -> Scenario:
    """Same scenario under the single-omni-AP baseline."""
    return replace(sc, mode="omrf")


PRESETS = {
    "tour": lambda: tour_scenario(),
    "tour_noscheduler": lambda: tour_scenario(scheduler_enabled=False),
    "tour_greedy": lambda: tour_scenario(policy="greedy_snr"),
    "tour_40mhz": lambda: tour_scenario(bandwidth_mhz=40),
    "tour_slow": lambda: tour_scenario(speed=SLOW_WALK_MPS),
    "tour_fast": lambda: tour_scenario(speed=FAST_WALK_MPS),
    "multi4": lambda: multi_client_scenario(4),
    "density6": lambda: density_scenario(6),
    "omrf": lambda: omrf_variant(multi_client_scenario(1)),
    "static": lambda: static_scenario(),
}


def write_all(out_dir: str) -> list[str]:
    os.makedirs(out_dir, exist_ok=True)
    paths = []
    for name, build in PRESETS.items():
        path = os.path.join(out_dir, f"{name}.yaml")
        with open(path, "w") as fh:
            fh.write(scenario_to_yaml(build()))
        paths.append(path)
    return paths
