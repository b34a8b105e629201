"""Compactness diagnostics for bounded kernels and semigroup extension from dense time samples."""
from .almost_periodic import ap_kernel, ap_profile, triple_grouping_check, window_sampling
from .covering import (CompactnessProfile, NetResult, box_bound, check_coverage, classify_counts,
                       compactness_profile, covering_count, greedy_net, joint_continuity_modulus,
                       sum_net, transfer_net)
from .envelopes import (GridFunction, envelope, extend_function, lower_envelope,
                        upper_envelope)
from .estimators import EnvelopeExtender, GreedyNet, SemigroupExtender
from .expm import expm, expm_times
from .fubini import (DiscreteMean, DoubleLimitReport, double_limit_gap, gap_search,
                     iterated_integral, remark2_gallery)
from .kernel import (IndexSampling, MultiKernel, SampledKernel, build_kernel, regroup,
                     sup_distance, transpose)
from .semigroup import (SampledSemigroup, SemigroupDefectError, extend_operator, renormalize,
                        verify_extension, weak_identity_check)

__version__ = "0.1.0"
