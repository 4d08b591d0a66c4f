"""Single-UAV position refinement inside a candidate zone via PSO.

The swarm maximizes demand-capped aggregate throughput over the zone's
members, with additive penalties for unmet demands, bandwidth overrun and
out-of-box positions. Penalties dominate any possible throughput gain, so
an infeasible particle can never outrank a feasible one while still carrying
gradient information toward feasibility.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, Sequence

import numpy as np

from . import channel
from .coverage import CandidateZone
from .geometry import FeasibleBox, Point3

if TYPE_CHECKING:  # pragma: no cover
    from .channel import ChannelParams
    from .scenario import Scenario


class ZoneCapacityError(Exception):
    """Even the zone witness exceeds the per-UAV bandwidth budget."""


@dataclass(frozen=True)
class SwarmConfig:
    particle_count: int = 30
    max_iterations: int = 100
    inertia_weight: float = 0.7
    cognitive_coeff: float = 1.5
    social_coeff: float = 1.5
    position_precision_m: float = 1.0
    early_stop_patience: int = 10
    seed: int = 0

    def __post_init__(self):
        if self.particle_count < 2:
            raise ValueError("particle_count must be >= 2")
        if not 0.0 < self.inertia_weight < 1.0:
            raise ValueError("inertia_weight must lie in (0, 1)")
        if self.position_precision_m <= 0:
            raise ValueError("position_precision_m must be positive")


@dataclass(frozen=True)
class LinkAllocation:
    ue_index: int
    bandwidth_hz: float
    rate_bps: float


@dataclass(frozen=True)
class PlacementSolution:
    uav_position: Point3
    served_ues: tuple[LinkAllocation, ...]
    fitness: float
    feasible: bool
    iterations: int


@dataclass
class _MemberData:
    """Per-member arrays for vectorized fitness evaluation."""

    indices: np.ndarray          # (m,) UE indices
    positions: np.ndarray        # (m, 3)
    demands: np.ndarray          # (m,)
    fixed_bandwidth: np.ndarray | None  # (m,) under fixed policy, else None
    b_max_hz: float
    grid_hz: float
    penalty_scale: float         # dominates any achievable throughput sum


def _member_data(members: Sequence[int], scenario: "Scenario") -> _MemberData:
    idx = np.array(sorted(members), dtype=int)
    pos = np.array([scenario.ues[i].position.as_array() for i in idx])
    demands = np.array([scenario.ues[i].demand_bps for i in idx])
    if scenario.bandwidth_policy == "fixed":
        fixed = np.array([
            scenario.ues[i].bandwidth_hz if scenario.ues[i].bandwidth_hz is not None
            else scenario.fixed_bandwidth_hz
            for i in idx
        ])
    else:
        fixed = None
    return _MemberData(
        indices=idx,
        positions=pos,
        demands=demands,
        fixed_bandwidth=fixed,
        b_max_hz=scenario.b_max_hz,
        grid_hz=scenario.bandwidth_grid_hz,
        penalty_scale=10.0 * float(np.sum(demands)),
    )


def _swarm_rates(positions: np.ndarray, data: _MemberData, params: "ChannelParams"):
    """Per-particle, per-member (bandwidth, rate, served) arrays.

    Positions at or below a member's horizon are scored as unserved rather
    than rejected, so the swarm can move away from them.
    """
    diff = positions[:, None, :] - data.positions[None, :, :]   # (S, m, 3)
    d = np.linalg.norm(diff, axis=2)
    dz = positions[:, 2][:, None] - data.positions[None, :, 2]
    valid = (d > 0.0) & (dz > 0.0)
    d_safe = np.where(valid, d, 1.0)
    sin_elev = np.clip(np.where(valid, dz, 0.0) / d_safe, 0.0, 1.0)
    elev = np.degrees(np.arcsin(sin_elev))
    gain = channel.gain_kernel(d_safe, elev, params)
    snr_hz = np.where(valid, channel.snr_hz_kernel(gain, params), 0.0)

    if data.fixed_bandwidth is not None:
        bw = np.broadcast_to(data.fixed_bandwidth, snr_hz.shape).copy()
        rate = bw * np.log2(1.0 + snr_hz / bw)
    else:
        bw, rate = _demand_fit_grid(snr_hz, data.demands, data.b_max_hz, data.grid_hz)
    rate = np.where(valid, rate, 0.0)
    served = valid & (rate >= data.demands[None, :])
    return bw, rate, served


def _demand_fit_grid(snr_hz: np.ndarray, demands: np.ndarray, b_max_hz: float, grid_hz: float):
    """Smallest grid bandwidth meeting each demand; B_max where impossible.

    rate(B) = B*log2(1 + snr_hz/B) is strictly increasing in B, so a
    bisection over grid indices finds the first sufficient multiple.
    """
    k_max = max(int(b_max_hz // grid_hz), 1)

    def rate_at(k):
        b = k * grid_hz
        return b * np.log2(1.0 + snr_hz / b)

    achievable = rate_at(np.full(snr_hz.shape, k_max)) >= demands[None, :]
    lo = np.ones(snr_hz.shape, dtype=np.int64)
    hi = np.full(snr_hz.shape, k_max, dtype=np.int64)
    while np.any(lo < hi):
        mid = (lo + hi) // 2
        ok = rate_at(mid) >= demands[None, :]
        hi = np.where(ok, mid, hi)
        lo = np.where(ok, lo, np.minimum(mid + 1, hi))
    k = np.where(achievable, lo, k_max)
    bw = k.astype(float) * grid_hz
    rate = bw * np.log2(1.0 + snr_hz / bw)
    return bw, rate


def _swarm_fitness(positions: np.ndarray, data: _MemberData, params: "ChannelParams",
                   box: FeasibleBox):
    bw, rate, served = _swarm_rates(positions, data, params)
    value = np.sum(np.minimum(rate, data.demands[None, :]), axis=1)
    unmet = np.sum(~served, axis=1)
    over_budget = np.sum(bw, axis=1) > data.b_max_hz
    outside = ~(
        np.all(positions >= box.lower[None, :], axis=1)
        & np.all(positions <= box.upper[None, :], axis=1)
    )
    penalty = data.penalty_scale * (unmet + over_budget.astype(int) + outside.astype(int))
    return value - penalty, penalty == 0


def fitness(position: Point3, zone: CandidateZone, scenario: "Scenario",
            params: "ChannelParams") -> tuple[float, bool]:
    """Demand-capped throughput minus constraint penalties at one position."""
    data = _member_data(zone.members, scenario)
    values, feasible = _swarm_fitness(
        position.as_array()[None, :], data, params, scenario.venue
    )
    return float(values[0]), bool(feasible[0])


def _allocations(position: np.ndarray, data: _MemberData, params: "ChannelParams"):
    bw, rate, served = _swarm_rates(position[None, :], data, params)
    return [
        LinkAllocation(ue_index=int(i), bandwidth_hz=float(b), rate_bps=float(r))
        for i, b, r in zip(data.indices, bw[0], rate[0])
    ], bool(np.all(served[0])) and float(np.sum(bw[0])) <= data.b_max_hz


def _init_bounds(zone: CandidateZone, spheres_by_index, box: FeasibleBox):
    """Bounding box of the member-sphere intersection, clipped to the box."""
    lo = box.lower.copy()
    hi = box.upper.copy()
    for i in zone.members:
        s = spheres_by_index.get(i)
        if s is None:
            continue
        c = s.center.as_array()
        lo = np.maximum(lo, c - s.radius)
        hi = np.minimum(hi, c + s.radius)
    w = zone.witness.as_array()
    lo = np.minimum(lo, w)
    hi = np.maximum(hi, w)
    return lo, hi


def optimize_position(
    zone: CandidateZone,
    scenario: "Scenario",
    params: "ChannelParams",
    config: SwarmConfig,
    spheres: Sequence = (),
    allow_capacity_overrun: bool = False,
    trace: list | None = None,
) -> PlacementSolution:
    """Global-best PSO over the zone, anchored at the witness.

    One particle is pinned at the witness, so the returned solution is
    feasible whenever the witness itself is. The search stops early once all
    demands are met and the global best, quantized to the position precision,
    has not moved for ``early_stop_patience`` iterations. Per-particle RNG
    substreams are derived from (config.seed, members), making the trajectory
    a pure function of the inputs.

    Raises ZoneCapacityError when even the witness overruns the bandwidth
    budget (the caller should split the zone), unless
    ``allow_capacity_overrun`` is set (baselines report violations instead).
    """
    data = _member_data(zone.members, scenario)
    box = scenario.venue
    spheres_by_index = {s.ue_index: s for s in spheres}
    lo, hi = _init_bounds(zone, spheres_by_index, box)
    v_max = 0.5 * (hi - lo)

    seed_seq = np.random.SeedSequence([int(config.seed) & 0xFFFFFFFF, *data.indices.tolist()])
    rngs = [np.random.default_rng(s) for s in seed_seq.spawn(config.particle_count)]

    n = config.particle_count
    positions = np.empty((n, 3))
    positions[0] = zone.witness.as_array()
    for i in range(1, n):
        positions[i] = lo + rngs[i].random(3) * (hi - lo)
    velocities = np.zeros((n, 3))

    # Under the fixed policy the bandwidth sum is position-independent, so a
    # witness overrun proves the whole zone infeasible; under demand-fit the
    # sum varies with position and capacity is judged after the search.
    if not allow_capacity_overrun and data.fixed_bandwidth is not None:
        witness_bw, _, _ = _swarm_rates(positions[0][None, :], data, params)
        if float(np.sum(witness_bw[0])) > data.b_max_hz:
            raise ZoneCapacityError(
                f"zone {zone.members} needs {float(np.sum(witness_bw[0])):.0f} Hz "
                f"at its witness, budget is {data.b_max_hz:.0f} Hz"
            )

    values, feas = _swarm_fitness(positions, data, params, box)
    pbest_pos = positions.copy()
    pbest_val = values.copy()
    pbest_feas = feas.copy()
    g = int(np.argmax(values))
    gbest_pos = positions[g].copy()
    gbest_val = float(values[g])
    gbest_feasible = bool(feas[g])

    quant = np.round(gbest_pos / config.position_precision_m)
    stable = 0
    iterations = 0
    if trace is not None:
        trace.append((0, gbest_val, tuple(gbest_pos)))

    for it in range(1, config.max_iterations + 1):
        iterations = it
        for i in range(n):
            r1 = rngs[i].random(3)
            r2 = rngs[i].random(3)
            velocities[i] = (
                config.inertia_weight * velocities[i]
                + config.cognitive_coeff * r1 * (pbest_pos[i] - positions[i])
                + config.social_coeff * r2 * (gbest_pos - positions[i])
            )
        np.clip(velocities, -v_max, v_max, out=velocities)
        positions = box.clamp(positions + velocities)

        values, feas = _swarm_fitness(positions, data, params, box)
        improved = values > pbest_val
        pbest_pos[improved] = positions[improved]
        pbest_val[improved] = values[improved]
        pbest_feas[improved] = feas[improved]
        g = int(np.argmax(pbest_val))
        if pbest_val[g] > gbest_val:
            gbest_val = float(pbest_val[g])
            gbest_pos = pbest_pos[g].copy()
            gbest_feasible = bool(pbest_feas[g])
        if trace is not None:
            trace.append((it, gbest_val, tuple(gbest_pos)))

        new_quant = np.round(gbest_pos / config.position_precision_m)
        if gbest_feasible and np.array_equal(new_quant, quant):
            stable += 1
            if stable >= config.early_stop_patience:
                break
        else:
            stable = 0
        quant = new_quant

    gbest_pos = _snap_into_zone(gbest_pos, zone, spheres_by_index, box, data, params)
    links, feasible = _allocations(gbest_pos, data, params)
    final_val, _ = _swarm_fitness(gbest_pos[None, :], data, params, box)
    return PlacementSolution(
        uav_position=Point3.from_array(gbest_pos),
        served_ues=tuple(links),
        fitness=float(final_val[0]),
        feasible=feasible,
        iterations=iterations,
    )


def _snap_into_zone(position, zone, spheres_by_index, box, data, params):
    """Move the final position to the nearest point inside every member sphere.

    Applied only when (a) the best position drifted outside some member
    sphere and (b) the snapped point preserves rate feasibility; the demand
    check is the final authority, so a snap that would break it is skipped.
    """
    if not spheres_by_index:
        return position
    members = [i for i in zone.members if i in spheres_by_index]
    if len(members) != len(zone.members):
        return position
    centers = np.array([spheres_by_index[i].center.as_array() for i in members])
    radii = np.array([spheres_by_index[i].radius for i in members])
    deficits = np.linalg.norm(position[None, :] - centers, axis=1) - radii
    if float(np.max(deficits)) <= 0:
        return position
    _, feasible_before = _swarm_fitness(position[None, :], data, params, box)
    from scipy.optimize import minimize

    def objective(p):
        return float(np.sum((p - position) ** 2))

    def cons_f(p):
        return radii - np.linalg.norm(p[None, :] - centers, axis=1)

    res = minimize(
        objective,
        zone.witness.as_array(),
        constraints=[{"type": "ineq", "fun": cons_f}],
        bounds=[(box.lower[k], box.upper[k]) for k in range(3)],
        method="SLSQP",
        options={"maxiter": 100, "ftol": 1e-10},
    )
    snapped = box.clamp(res.x)
    if float(np.max(np.linalg.norm(snapped[None, :] - centers, axis=1) - radii)) > 0:
        return position
    _, feasible_after = _swarm_fitness(snapped[None, :], data, params, box)
    if bool(feasible_after[0]) or not bool(feasible_before[0]):
        return snapped
    return position
