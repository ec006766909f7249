# Dynamic water-fill dispatcher on a 4-link bundle: delay target vs energy.
from eeebundle import GovernorSpec
from eeebundle.experiments import bundle_sweep, delay_sweep

frame = GovernorSpec.frame()
rows = delay_sweep([5e-6, 10e-6, 20e-6, 50e-6], loads=[0.3], seeds=[1], gov=frame,
                   duration=1.0, warmup=0.1)
for r in rows:
    loads = " ".join(f"{x:.2f}" for x in r["link_loads"])
    print(f"target {r['target'] * 1e6:4.0f} us  delay {r['mean_delay'] * 1e6:6.2f} us"
          f"  energy {r['energy']:.4f}  link loads {loads}")

print()
for r in bundle_sweep([4], [0.5], [1], frame, duration=1.0, warmup=0.1):
    print(f"{r['strategy']:10s} energy {r['energy']:.4f}  delay {r['mean_delay'] * 1e6:.2f} us")
