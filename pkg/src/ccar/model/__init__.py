from .bitstream import Bitstream
from .codec import (
    CodingStats,
    decode_image,
    encode_image,
    hyper_latent_of,
    pad_to_tiles,
    progressive_decode,
    sample_image,
)
from .config import ModelConfig, SliceLayout, cc_depths, layout_for, slice_layout
from .network import CodecModel, TrainStep

__all__ = [
    "Bitstream",
    "CodecModel",
    "CodingStats",
    "ModelConfig",
    "SliceLayout",
    "TrainStep",
    "cc_depths",
    "decode_image",
    "encode_image",
    "hyper_latent_of",
    "layout_for",
    "pad_to_tiles",
    "progressive_decode",
    "sample_image",
    "slice_layout",
]
