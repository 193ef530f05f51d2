"""Neck regions and the neck decomposition."""

from .classify import BallClass, classify_ball
from .context import Independence, NeckContext
from .coverings import BBall, DCover, SBall, cover_d_ball, cover_e_ball
from .decompose import Decomposition, NeckEntry, check_gamma, neck_decompose
from .noncollapse import is_linearly_independent, is_noncollapsed_ball, noncollapsing_set
from .params import NeckParams
from .region import NeckRegion, build_neck, extend_radius_function
from .verify import NeckReport, verify_neck

__all__ = [
    "BBall",
    "BallClass",
    "DCover",
    "Decomposition",
    "Independence",
    "NeckContext",
    "NeckEntry",
    "NeckParams",
    "NeckRegion",
    "NeckReport",
    "SBall",
    "build_neck",
    "check_gamma",
    "classify_ball",
    "cover_d_ball",
    "cover_e_ball",
    "extend_radius_function",
    "is_linearly_independent",
    "is_noncollapsed_ball",
    "neck_decompose",
    "noncollapsing_set",
    "verify_neck",
]
