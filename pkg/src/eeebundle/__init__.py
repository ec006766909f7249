"""Energy model, allocation and simulation of bundled Energy Efficient Ethernet links."""

from .allocation import (AllocationVector, BundleSpec, InfeasibleDemand, allocate,
                         brute_force_min, equitable, waterfill, waterfill_capped)
from .bundlesim import (DispatcherConfig, DispatcherState, SimReport, Strategy, dispatch_frame,
                        measure_delay_tracking, run_allocation, run_bundle)
from .linksim import (BacklogOverflow, DelayAccumulator, EnergyAccumulator, LinkState, Mode,
                      governor_wake_decision, simulate_link)
from .model import (Distribution, Governor, GovernorSpec, LinkParams, ModelDomainError,
                    TrafficSpec, bundle_energy, concavity_margin,
                    energy_second_derivative_grid, link_energy, rho_star, toff,
                    toff_burst_high, toff_burst_low, toff_frame)
from .traffic import (FrameEvent, TraceFormatError, TraceStream, gen_pareto, gen_poisson,
                      load_trace, save_trace, scale_trace)

__version__ = "0.1.0"
