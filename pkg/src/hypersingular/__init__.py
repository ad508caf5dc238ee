"""Numerical laboratory for oscillatory hypersingular integrals along radial
hypersurfaces: profiles, kernels, bump partitions, phase bounds, multiplier
pieces and operator application."""

__version__ = "0.1.0"

from .bumps import (EpsilonConstants, PatchIndex, chi, compute_epsilons, eta, kappa,  # noqa: E402
                    zeta)
from .errors import (BudgetExceeded, DegenerateData, DegenerateDerivative,  # noqa: E402
                     DomainError, HypersingularError, InvalidKernel, InvalidParams,
                     NonconvergentTail, NonPositiveRadius, SignViolation, SpectralLeakage,
                     ZeroFrequency)
from .kernel import KernelOmega, ZonalKernel, omega_in_rotated_frame, omega_mean  # noqa: E402
from .multiplier import (DecayFit, decay_fit, lattice_pieces, m_l, m_total,  # noqa: E402
                         m_total_adaptive, sobolev_envelope)
from .operator import (GridFunction, apply_direct, apply_spectral,  # noqa: E402
                       adjoint_apply_spectral, lp_norm, sobolev_norm)
from .params import Frequency, OperatorParams  # noqa: E402
from .phase import (CaseTag, check_lemma_lower_bound, classify_patch,  # noqa: E402
                    lambda_scale, phase_and_derivatives)
from .profiles import (ExpSinh, Monomial, MonomialSaturating, MonomialSum,  # noqa: E402
                       certify_admissibility, eval_profile, gaussian_curvature)

__all__ = [
    "__version__",
    "EpsilonConstants",
    "PatchIndex",
    "chi",
    "compute_epsilons",
    "eta",
    "kappa",
    "zeta",
    "BudgetExceeded",
    "DegenerateData",
    "DegenerateDerivative",
    "DomainError",
    "HypersingularError",
    "InvalidKernel",
    "InvalidParams",
    "NonconvergentTail",
    "NonPositiveRadius",
    "SignViolation",
    "SpectralLeakage",
    "ZeroFrequency",
    "KernelOmega",
    "ZonalKernel",
    "omega_in_rotated_frame",
    "omega_mean",
    "DecayFit",
    "decay_fit",
    "lattice_pieces",
    "m_l",
    "m_total",
    "m_total_adaptive",
    "sobolev_envelope",
    "GridFunction",
    "apply_direct",
    "apply_spectral",
    "adjoint_apply_spectral",
    "lp_norm",
    "sobolev_norm",
    "Frequency",
    "OperatorParams",
    "CaseTag",
    "check_lemma_lower_bound",
    "classify_patch",
    "lambda_scale",
    "phase_and_derivatives",
    "ExpSinh",
    "Monomial",
    "MonomialSaturating",
    "MonomialSum",
    "certify_admissibility",
    "eval_profile",
    "gaussian_curvature",
]
