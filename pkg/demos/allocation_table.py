# Per-link rates and analytic bundle energy of the static strategies.
from eeebundle import BundleSpec, GovernorSpec, LinkParams, allocate, bundle_energy

params = LinkParams()
bundle = BundleSpec.homogeneous(4, params, max_utilization=0.9)
gov = GovernorSpec.frame()

for demand in (6.21e9, 12.6e9, 18.81e9, 25.08e9, 31.4e9):
    print(f"bundle rate {demand / 1e9:.2f} Gb/s")
    for name in ("equitable", "waterfill", "capped"):
        alloc = allocate(name, bundle, demand)
        rates = " ".join(f"{r / 1e9:5.2f}" for r in alloc.rates)
        energy = bundle_energy(alloc, gov, params, 1000).normalized
        print(f"  {name:10s} {rates}   E = {energy:.3f}")
