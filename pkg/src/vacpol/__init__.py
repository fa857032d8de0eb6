"""Vacuum polarisation around nuclei: Uehling kernel, radial Dirac spectra,
projector calculus and first-order level shifts, in natural units
(hbar = c = m_e = 1)."""

from .errors import (ConvergenceError, CoverageError, DomainError, GapCrossingError,
                     InvariantViolation, QuadratureError, SingularityError,
                     SupercriticalError, UnsupportedOperationError, VacpolError)
from .units import Constants, fm_to_natural, fourier_radial, muonic_constants
from .nuclear import NuclearModel, density, density_fourier, potential, potential_fourier
from .kernel import (KernelEval, RadialTable, c_closed, c_integral, diagonal_divergence_study,
                     f0_integral, uehling_fourier, uehling_point_position, uehling_position,
                     vacuum_density_fourier)
from .dirac import (ChannelSpectrum, HydrogenicState, RadialGrid, coulomb_dirac_energy,
                    hydrogenic_radial, solve_channel)
from .spectral import (OperatorMatrix, ProjectorPair, hs_norm_study, q1_trace_kernel,
                       q2_density_cancellation, q_contour, spectral_projector)
from .shifts import (ShiftReport, effective_potential, first_order_shift, muonic_report,
                     point_limit_shift, shift_report)

__version__ = "1.0.0"
