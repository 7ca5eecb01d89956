"""Travelling combustion waves of the ZFK equation in the high activation energy limit."""

__version__ = "0.1.0"

from .model import Params, PhasePoint, reaction_omega, vector_field, apply_symmetry  # noqa: E402
from .asymptotics import build_series, cbar_linear, hs_tail_integral, b_eps_derivative  # noqa: E402
from .shooting import ShootConfig, WaveProfile, build_profile, find_min_speed, gap  # noqa: E402

__all__ = [
    "Params", "PhasePoint", "reaction_omega", "vector_field", "apply_symmetry",
    "build_series", "cbar_linear", "hs_tail_integral", "b_eps_derivative",
    "ShootConfig", "WaveProfile", "build_profile", "find_min_speed", "gap",
]
