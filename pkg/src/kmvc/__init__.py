"""Mergeable k-minimum-values sketches with a compact lossless codec."""

from .codec import decode, decode_any, encode, encode_uncompressed, merge_blobs, open_stream
from .entropy import (
    EmpiricalEntropyReport,
    EntropyEstimate,
    empirical_hkn,
    h_uniform,
    hbs_approx,
    hbs_exact,
    hkn_approx,
    hkn_exact,
    log_choose,
    predicted_min_leading_zeros,
)
from .errors import (
    CodecError,
    ConfigMismatchError,
    DomainError,
    KMVError,
    OverflowGuardError,
)
from .hashing import DEFAULT_CONFIG, HashConfig, hash_item, synthetic_stream
from .sketch import EstimateResult, KMVSketch, merge_all

__version__ = "0.1.0"

__all__ = [
    "CodecError",
    "ConfigMismatchError",
    "DEFAULT_CONFIG",
    "DomainError",
    "EmpiricalEntropyReport",
    "EntropyEstimate",
    "EstimateResult",
    "HashConfig",
    "KMVError",
    "KMVSketch",
    "OverflowGuardError",
    "decode",
    "decode_any",
    "empirical_hkn",
    "encode",
    "encode_uncompressed",
    "h_uniform",
    "hash_item",
    "hbs_approx",
    "hbs_exact",
    "hkn_approx",
    "hkn_exact",
    "log_choose",
    "merge_all",
    "merge_blobs",
    "open_stream",
    "predicted_min_leading_zeros",
    "synthetic_stream",
]
