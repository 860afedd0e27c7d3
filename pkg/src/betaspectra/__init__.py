"""Spectral analysis of Perron-Frobenius operators of beta-maps."""
from .betaspec import BetaSpec
from .continuity import holder_constants, left_parry_approximants, nondiff_probe, track
from .examples import QuarticFamily, verify_example
from .expansion import greedy_digits, quasi_greedy_digits
from .functional import continuity_residual, eval_F, left_limit_F, lipschitz_probe
from .series import fix_count, phi, phi_hat, psi, zeta, zeta_series
from .spectra import count_zeros, locate_eigenvalues, scan_beta_range, subleading
from .transfer import StepFunction, apply_L, decay_fit, good_decay_construct, parry_density

__version__ = "0.1.0"
__all__ = [
    "BetaSpec",
    "QuarticFamily",
    "StepFunction",
    "apply_L",
    "continuity_residual",
    "count_zeros",
    "decay_fit",
    "eval_F",
    "fix_count",
    "good_decay_construct",
    "greedy_digits",
    "holder_constants",
    "left_limit_F",
    "left_parry_approximants",
    "lipschitz_probe",
    "locate_eigenvalues",
    "nondiff_probe",
    "parry_density",
    "phi",
    "phi_hat",
    "psi",
    "quasi_greedy_digits",
    "scan_beta_range",
    "subleading",
    "track",
    "verify_example",
    "zeta",
    "zeta_series",
]
