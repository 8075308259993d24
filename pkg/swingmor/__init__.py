"""swingmor - Parametric structure-preserving reduction of swing-equation network models."""

__version__ = "0.1.0"

from .api import API
from .config import CoefficientRanges, FrequencyGrid, IrkaOptions, Tolerances
from .errors import (
    CertificationError,
    ConfigError,
    DisconnectedGraphError,
    ModelError,
    ResidueMismatchError,
    SingularPencilError,
    SwingMorError,
)
from .mor import ReducedModel, ReductionBasis, build_parametric_rom, global_basis, reduce, sor_irka
from .netmodel import NetworkModel, ParameterSpace, SecondOrderModel, generate_network, load_model, save_model
from .sysops import eval_transfer, h2_norm, hinf_norm, spectral_split
from .validate import Certificate, ParameterGrid, SweepReport, certify, sweep

__all__ = [
    "API",
    "Certificate",
    "CertificationError",
    "CoefficientRanges",
    "ConfigError",
    "DisconnectedGraphError",
    "FrequencyGrid",
    "IrkaOptions",
    "ModelError",
    "NetworkModel",
    "ParameterGrid",
    "ParameterSpace",
    "ReducedModel",
    "ReductionBasis",
    "ResidueMismatchError",
    "SecondOrderModel",
    "SingularPencilError",
    "SweepReport",
    "SwingMorError",
    "Tolerances",
    "build_parametric_rom",
    "certify",
    "eval_transfer",
    "generate_network",
    "global_basis",
    "h2_norm",
    "hinf_norm",
    "load_model",
    "reduce",
    "save_model",
    "sor_irka",
    "spectral_split",
    "sweep",
]
