"""Grant-free activity detection for massive MIMO IoT uplinks.

Detectors that learn channel estimates across random access slots, the
plain and full-CSI thresholding references, S-OMP, probability-of-failure
bounds and a seeded Monte Carlo harness.
"""
from .baselines import somp, somp_path, trivial_pursuit_demo, trivial_pursuit_slot
from .bounds import (BoundInputs, BoundReport, MinLResult, omc_pof_bound, omc_pof_bound_large_m,
                     otd_pof_bound, otd_pof_bound_large_m, solve_measurement_inequality,
                     subexp_params)
from .detectors import (ChannelKnowledge, DetectionResult, SupportEstimate, ThresholdPair,
                        compute_thresholds, full_csi_slot, ls_refine, omc_slot, otd_slot,
                        plain_slot, plain_stats, select_top_k, update_knowledge, weighted_stats)
from .errors import (CapExceeded, ConfigError, DimensionError, GrantFreeError, LogLogDomainError,
                     NumericError, PowerControlRequired, SingularSupport, UnderdeterminedSupport)
from .harness import ExperimentSpec, SlotResult, run_bound_sweep, run_experiment, verify_means
from .system import (ActivityPattern, SlotData, SystemConfig, draw_activity, gen_channels,
                     gen_codes, power_profile, synthesize_slot)

__version__ = "0.1.0"
