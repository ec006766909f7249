# Simulated vs analytic energy of a 2-link bundle as traffic moves to link 2.
from eeebundle import GovernorSpec
from eeebundle.experiments import TrafficSource, share_sweep

gov = GovernorSpec.frame()
for kind in ("poisson", "pareto"):
    rows = share_sweep([0.75, 1.25], seeds=[1, 2], gov=gov, source=TrafficSource(kind),
                       n_shares=4, duration=1.0, warmup=0.1)
    print(kind)
    for r in rows:
        print(f"  load {r['load']:.2f}  x2 {r['x2']:.3f}  sim {r['energy_mean']:.4f}"
              f"  model {r['energy_model']:.4f}")

# The lowest energy sits at the left end: fill one link before using the other.
