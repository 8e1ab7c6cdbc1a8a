from .contraction import paired_kernel_sup, paired_kernels, tree_amplitude_value
from .fourier import RankOneSuperposition, fourier_decompose
from .ibp import IBPResult, LineTable, ibp_apply, ibp_c_constant, ibp_identity
from .oracle import (antisymmetrized_direct_kernel, direct_kernel_tensor, oracle_direct_alpha,
                     oracle_direct_alpha_all, oracle_direct_kernel)
from .problem import AmplitudeProblem, SpinAssignment, admissible_leg_counts, random_external
from .recursion import (apply_c, apply_w, dense_alpha, fundamental_form, kernel_hat_A, recurse_alpha,
                        recurse_alpha_all)
from .tree_expansion import (interpolated_covariance, interpolation_integral, tree_expansion_coefficients,
                             tree_polynomial)
