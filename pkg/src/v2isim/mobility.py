"""Poisson arrivals and constant-velocity kinematics on a bidirectional freeway.

The stretch is centered at x = 0: eastbound traffic enters at -road_length/2
travelling toward +x, westbound enters at +road_length/2 travelling toward
-x. Lateral lane offsets keep the two directions on opposite sides of the
median, where the RSU sits by default.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .core import ScenarioConfig, SignedMeters, TimeMs, ceil_ms


class MobilityError(ValueError):
    """Raised on kinematics contract violations (e.g. querying before spawn)."""


class Direction(Enum):
    EAST = "east"
    WEST = "west"

    @property
    def sign(self) -> int:
        return 1 if self is Direction.EAST else -1


@dataclass(frozen=True)
class VehicleKinematics:
    """Constant-speed vehicle: spawned at the entry edge of its direction."""

    vehicle_id: int
    direction: Direction
    lane: int
    spawn_time: TimeMs
    spawn_x: float
    y: float
    speed: float

    @property
    def spawn_position(self) -> tuple[float, float]:
        return (self.spawn_x, self.y)


@dataclass(frozen=True)
class ArrivalProcess:
    """Poisson arrival stream for one driving direction."""

    rate: float          # veh/s for this direction
    horizon: TimeMs
    direction: Direction


def entry_x(direction: Direction, road_length: float) -> float:
    return -direction.sign * road_length / 2.0


def lane_offset_y(direction: Direction, lane: int, lane_width: float) -> float:
    # Eastbound lanes on +y, westbound on -y; lane 0 borders the median.
    return direction.sign * (lane + 0.5) * lane_width


def generate_arrivals(proc: ArrivalProcess, cfg: ScenarioConfig,
                      rng: np.random.Generator, id_start: int = 0) -> list[VehicleKinematics]:
    """Generate the direction's arrivals over the horizon, spawn-time ordered.

    Inter-arrival gaps are exponential with mean 1/rate; lanes are uniform
    over the direction's lanes. Spawn instants land on the 1 ms grid and are
    strictly increasing (simultaneous arrivals are pushed apart by 1 ms).
    Deterministic for a given rng state.
    """
    if proc.rate <= 0:
        raise MobilityError(f"arrival rate must be > 0 (got {proc.rate})")
    lanes = cfg.lane_count // 2
    x0 = entry_x(proc.direction, cfg.road_length)
    out: list[VehicleKinematics] = []
    t_s = 0.0
    prev_ms = 0
    while True:
        t_s += rng.exponential(1.0 / proc.rate)
        t_ms = max(ceil_ms(t_s * 1000.0), prev_ms + 1)
        if t_ms > proc.horizon:
            break
        lane = int(rng.integers(lanes))
        out.append(
            VehicleKinematics(
                vehicle_id=id_start + len(out),
                direction=proc.direction,
                lane=lane,
                spawn_time=t_ms,
                spawn_x=x0,
                y=lane_offset_y(proc.direction, lane, cfg.lane_width),
                speed=cfg.mean_speed,
            )
        )
        prev_ms = t_ms
    return out


def position_at(v: VehicleKinematics, t: TimeMs) -> tuple[float, float]:
    """Position at time t; querying before spawn is a contract violation."""
    if t < v.spawn_time:
        raise MobilityError(
            f"vehicle {v.vehicle_id} queried at {t} ms before spawn "
            f"({v.spawn_time} ms)"
        )
    x = v.spawn_x + v.direction.sign * v.speed * (t - v.spawn_time) / 1000.0
    return (x, v.y)


def signed_distance(v: VehicleKinematics, t: TimeMs, rsu_x: float) -> SignedMeters:
    """Longitudinal distance to the RSU in v's travel direction (+ = upstream)."""
    x, _ = position_at(v, t)
    return (rsu_x - x) * v.direction.sign


def trigger_crossing_time(v: VehicleKinematics, d_t: SignedMeters,
                          rsu_x: float = 0.0) -> TimeMs:
    """Unique instant at which the signed distance to the RSU equals d_t.

    Rounded up to the next whole millisecond. The trigger line must lie
    downstream of the spawn point, which holds whenever |d_t| is inside the
    stretch and vehicles spawn at the entry edge.
    """
    start = (rsu_x - v.spawn_x) * v.direction.sign
    meters_to_go = start - d_t
    if meters_to_go < 0:
        raise MobilityError(
            f"trigger d_t={d_t} lies behind vehicle {v.vehicle_id}'s spawn point"
        )
    return v.spawn_time + ceil_ms(meters_to_go / v.speed * 1000.0)


def exit_time(v: VehicleKinematics, road_length: float) -> TimeMs:
    """Despawn instant: when the vehicle reaches the exit edge."""
    return v.spawn_time + ceil_ms(road_length / v.speed * 1000.0)


def transit_ms(road_length: float, speed: float) -> TimeMs:
    return ceil_ms(road_length / speed * 1000.0)


def in_stretch(v: VehicleKinematics, t: TimeMs, road_length: float) -> bool:
    return v.spawn_time <= t < exit_time(v, road_length)


def positions_x(spawn_times: np.ndarray, t: TimeMs, direction: Direction,
                road_length: float, speed: float) -> np.ndarray:
    """Vectorized longitudinal positions for same-direction vehicles."""
    x0 = entry_x(direction, road_length)
    return x0 + direction.sign * speed * (t - spawn_times) / 1000.0


def stretch_window(spawn_times: np.ndarray, t: TimeMs, transit: TimeMs) -> tuple[int, int]:
    """Index window [lo, hi) of vehicles in-stretch at t (spawn-sorted input)."""
    lo = int(np.searchsorted(spawn_times, t - transit, side="right"))
    hi = int(np.searchsorted(spawn_times, t, side="right"))
    return lo, hi
