"""Distributed time-domain reflectometry with OCDM subchirp multiple access."""

__version__ = "0.1.0"

from .fresnel import FresnelBasis, build_fresnel_basis, dfnt_forward, dfnt_inverse  # noqa: E402
from .tdr import Measurement, SystemParams, run_campaign  # noqa: E402

__all__ = [
    "FresnelBasis",
    "Measurement",
    "SystemParams",
    "build_fresnel_basis",
    "dfnt_forward",
    "dfnt_inverse",
    "run_campaign",
    "__version__",
]
