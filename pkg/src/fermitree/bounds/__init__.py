from .formulas import (contracted_legs, corollary_effective_norm, effective_norm, loop_bound, loop_lines,
                       perturbative_bound, standard_bound, theorem1_bound, theorem2_bound)
from .model import (ScaleModel, ScalingFit, build_single_scale, bump, power_counting_fit, single_scale_fit,
                    smooth_step, synthetic_covariance, synthetic_fit)
from .norms import CovarianceNorms, covariance_norms
from .report import BoundReport, reports_to_csv
