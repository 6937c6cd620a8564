"""Privacy-preserving scanpath comparison.

Two parties compute the Needleman-Wunsch alignment score of their
privately held, string-encoded scanpaths under the Paillier cryptosystem,
learning nothing beyond the sequence lengths and the final score.
"""

from .errors import (
    ConfigurationError,
    InputError,
    NegotiationError,
    OracleCheckError,
    PrivalignError,
    ProtocolError,
    TransportError,
)
from .nw_core import CostParams, CandidateSet, candidate_stats, plaintext_nw
from .paillier import (
    Ciphertext,
    PublicKey,
    SecretKey,
    decrypt,
    encrypt,
    hom_add,
    hom_negate,
    hom_scalar_mul,
    keygen,
    toy_keypair,
)
from .protocol import (
    ProtocolParams,
    SessionResult,
    run_loopback_session,
    run_session,
)
from .scanpath import (
    ALPHABET,
    BinaryCost,
    GridConfig,
    GridManhattanCost,
    LetterIndexCost,
    encode_fixations,
    encode_raw_gaze,
)

__version__ = "0.1.0"

__all__ = [
    "ALPHABET",
    "BinaryCost",
    "CandidateSet",
    "Ciphertext",
    "ConfigurationError",
    "CostParams",
    "GridConfig",
    "GridManhattanCost",
    "InputError",
    "LetterIndexCost",
    "NegotiationError",
    "OracleCheckError",
    "PrivalignError",
    "ProtocolError",
    "ProtocolParams",
    "PublicKey",
    "SecretKey",
    "SessionResult",
    "TransportError",
    "candidate_stats",
    "decrypt",
    "encode_fixations",
    "encode_raw_gaze",
    "encrypt",
    "hom_add",
    "hom_negate",
    "hom_scalar_mul",
    "keygen",
    "plaintext_nw",
    "run_loopback_session",
    "run_session",
    "toy_keypair",
]
