"""Desk-scale learned image codec with channel-conditional entropy modeling."""

__version__ = "0.1.0"

from . import bd, entropy, metrics, nn, rangecoder
from .model import (
    Bitstream,
    CodecModel,
    ModelConfig,
    decode_image,
    encode_image,
    progressive_decode,
    sample_image,
)

__all__ = [
    "Bitstream",
    "CodecModel",
    "ModelConfig",
    "bd",
    "decode_image",
    "encode_image",
    "entropy",
    "metrics",
    "nn",
    "progressive_decode",
    "rangecoder",
    "sample_image",
    "__version__",
]
