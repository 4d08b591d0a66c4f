"""Particle swarm refinement of one UAV inside a candidate zone.

The geometric witness only certifies that the zone is nonempty; it usually
sits at the altitude floor where link quality is poor. The swarm climbs to a
position where every member's demand is met, then stops early once the best
position is stable to within the 1 m position precision.
"""
from uavplan import (
    ChannelParams,
    SwarmConfig,
    build_spheres,
    enumerate_zones,
    fitness,
    generate_scenario,
    optimize_position,
)

params = ChannelParams()
scenario = generate_scenario("B", 2, seed=4)   # 300 m venue, 20 users, 6.5 Mbit/s

spheres = build_spheres(scenario, params)
zones = enumerate_zones(spheres, scenario.venue)
zone = zones[0]
print(f"zone with {len(zone.members)} members, witness at "
      f"({zone.witness.x:.1f}, {zone.witness.y:.1f}, {zone.witness.z:.1f})")

value, feasible = fitness(zone.witness, zone, scenario, params)
print(f"fitness at witness: {value / 1e6:.1f} Mbit/s, feasible={feasible}\n")

trace = []
sol = optimize_position(zone, scenario, params, SwarmConfig(seed=4),
                        spheres=spheres, trace=trace)

print("iteration  best fitness (Mbit/s)")
last = None
for it, val, _pos in trace:
    if val != last:
        print(f"{it:>9}  {val / 1e6:>12.1f}")
        last = val
print(f"\nfinal position ({sol.uav_position.x:.1f}, {sol.uav_position.y:.1f}, "
      f"{sol.uav_position.z:.1f}), feasible={sol.feasible}, "
      f"stopped after {sol.iterations} iterations")
print("per-user allocation (first 5):")
for link in sol.served_ues[:5]:
    print(f"  UE {link.ue_index}: {link.bandwidth_hz / 1e6:.2f} MHz -> "
          f"{link.rate_bps / 1e6:.1f} Mbit/s")
