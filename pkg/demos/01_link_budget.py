"""Walk through the air-to-ground link model.

Shows how the LoS probability rises with elevation angle, how the achievable
rate falls with distance, and how inverting the rate at the design LoS
threshold gives the service radius that later becomes each user's coverage
sphere.
"""
import math

from uavplan import ChannelParams, Point3, link_budget, max_service_distance

params = ChannelParams()

print("Radio defaults: 5250 MHz, 20 dBm tx, 0 dBi antennas, "
      "-85 dBm noise floor over 20 MHz")
print(f"free-space constant K0 = {params.k0:.1f} "
      f"({10 * math.log10(1 / params.k0):.2f} dB at 1 m)\n")

ue = Point3(0.0, 0.0, 0.0)

print("LoS probability and rate at fixed 100 m range, sweeping elevation:")
print(f"{'elev_deg':>9} {'p_los':>8} {'gain_db':>9} {'rate_mbps':>10}")
for elev in (5, 10, 20, 30, 45, 60, 90):
    t = math.radians(elev)
    uav = Point3(100.0 * math.cos(t), 0.0, 100.0 * math.sin(t))
    lb = link_budget(ue, uav, 20e6, params)
    print(f"{elev:>9} {lb.p_los:>8.4f} {10 * math.log10(lb.gain):>9.2f} "
          f"{lb.rate_bps / 1e6:>10.1f}")

print("\nRate vs distance along a 45-degree ray at 20 MHz:")
print(f"{'dist_m':>7} {'rate_mbps':>10}")
for d in (20, 50, 100, 200, 400, 800):
    uav = Point3(d / math.sqrt(2), 0.0, d / math.sqrt(2))
    lb = link_budget(ue, uav, 20e6, params)
    print(f"{d:>7} {lb.rate_bps / 1e6:>10.2f}")

print("\nService radius (demand satisfiable inside, at the 0.9 LoS design "
      "probability):")
print(f"{'demand_mbps':>12} {'radius_20MHz':>13} {'radius_160MHz':>14}")
for demand in (6.5e6, 13e6, 26e6, 52e6):
    r20 = max_service_distance(demand, 20e6, params)
    r160 = max_service_distance(demand, 160e6, params)
    print(f"{demand / 1e6:>12.1f} {r20:>13.1f} {r160:>14.1f}")
