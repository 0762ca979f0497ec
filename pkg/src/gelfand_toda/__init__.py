"""Gelfand hypergeometric functions on GM(2, N), Laplace sequences and Toda tau functions."""
from .contour import PochhammerCycle, QuadSettings, build_pochhammer, integrate_batch
from .errors import (
    ContourError,
    DegenerateCycleError,
    FieldError,
    GelfandTodaError,
    LadderError,
    ParameterError,
    QuadratureError,
    VanishingInvariantError,
)
from .fields import Gauge, Jet2, RationalS
from .hgf import AlphaWeights, HgfValue, PointConfig, ZMatrix, eval_F, eval_phi, phi_partials
from .laplace import HyperbolicOperator, normal_sequence
from .toda import SeedParams, TauSequence, build_tau_main, verify_2dthe

__all__ = [
    "AlphaWeights",
    "ContourError",
    "DegenerateCycleError",
    "FieldError",
    "Gauge",
    "GelfandTodaError",
    "HgfValue",
    "HyperbolicOperator",
    "Jet2",
    "LadderError",
    "ParameterError",
    "PochhammerCycle",
    "PointConfig",
    "QuadSettings",
    "QuadratureError",
    "RationalS",
    "SeedParams",
    "TauSequence",
    "VanishingInvariantError",
    "ZMatrix",
    "build_pochhammer",
    "build_tau_main",
    "eval_F",
    "eval_phi",
    "integrate_batch",
    "normal_sequence",
    "phi_partials",
    "verify_2dthe",
]
