from .algebra import GeneratorSet, GrassmannPoly, power_series_exp, product, random_even_poly
from .gaussian import free_energy_oracle, gaussian_integral, log_series
from .lattice import Torus
from .momentum import (Covariance, SeparableKernel, antisymmetrize, build_interaction, fourier_kernel,
                       fourier_npoint, inverse_fourier_kernel, kernel_polynomial, random_covariance,
                       random_kernel)
from .pfaffian import pfaffian, pfaffian_batch, pfaffian_elimination, pfaffian_matching

grassmann_product = product
