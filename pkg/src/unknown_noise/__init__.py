"""Sending a message of L bits over a binary channel with unknown adversarial noise."""

__version__ = "0.1.0"

from .blockcode import CodeParams, ec_decode, ec_encode  # noqa: E402
from .channel import Adversary, Channel, is_silent  # noqa: E402
from .field import GF, FieldElement, gf  # noqa: E402
from .integrity import amd_decode, amd_encode, fingerprint, is_codeword  # noqa: E402
from .protocol import (  # noqa: E402
    RunReport, derive_params, round_params, run_known_l, run_unknown_l,
)
from .rscode import Polynomial, get_polynomial  # noqa: E402

__all__ = [
    "Adversary", "Channel", "CodeParams", "FieldElement", "GF", "Polynomial", "RunReport",
    "__version__", "amd_decode", "amd_encode", "derive_params", "ec_decode", "ec_encode",
    "fingerprint", "get_polynomial", "gf", "is_codeword", "is_silent", "round_params",
    "run_known_l", "run_unknown_l",
]
