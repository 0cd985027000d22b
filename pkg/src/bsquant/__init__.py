"""Theta sections on Lagrangian torus fibrations: lifts, Dirac kernels, adiabatic limits."""

from .acs import OmegaMap, check_integrability, omega_catalog, scale_adiabatic
from .group_actions import catalog, flat_torus, jordan_block, kodaira_thurston, twisted_torus
from .prequantum import BSPoint, PrequantumLift, bs_points, check_liftable
from .theta import ApproxThetaSection, ThetaSection, theta_eval

__version__ = "0.1.0"

__all__ = [
    "OmegaMap", "check_integrability", "omega_catalog", "scale_adiabatic",
    "catalog", "flat_torus", "jordan_block", "kodaira_thurston", "twisted_torus",
    "BSPoint", "PrequantumLift", "bs_points", "check_liftable",
    "ApproxThetaSection", "ThetaSection", "theta_eval",
]
