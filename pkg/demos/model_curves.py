# Analytic idle time and energy of a single link, frame vs burst governor.
import numpy as np

from eeebundle import GovernorSpec, LinkParams, TrafficSpec, link_energy, rho_star, toff

params = LinkParams()
frame = GovernorSpec.frame()
burst = GovernorSpec.burst(qw=20, tmax=100e-6)

loads = np.linspace(0.05, 0.95, 10)
spec = TrafficSpec.for_packets(params, 1000, loads)

print(f"burst threshold rho* = {rho_star(burst, spec):.4f}")
print(f"{'load':>6} {'Toff frame (us)':>16} {'Toff burst (us)':>16} {'E frame':>8} {'E burst':>8}")
for rho, tf, tb, ef, eb in zip(loads, toff(spec, frame, params) * 1e6,
                               toff(spec, burst, params) * 1e6,
                               link_energy(spec, frame, params),
                               link_energy(spec, burst, params)):
    print(f"{rho:6.2f} {tf:16.3f} {tb:16.3f} {ef:8.4f} {eb:8.4f}")

# Frame transmission loses most of its savings well before full load,
# which is why concentrating traffic on few links pays off.
