"""Exception hierarchy shared across the codec."""


class CodecError(Exception):
    """Base class for all domain errors raised by this package."""


class ShapeError(CodecError, ValueError):
    """Tensor shapes are inconsistent (channel mismatch, bad spatial dims, ...)."""


class ConfigError(CodecError, ValueError):
    """Invalid model or training configuration."""


class ConfigHashMismatch(CodecError):
    """Checkpoint or bitstream was produced under a different model config."""


class MalformedBitstream(CodecError):
    """Bitstream header or segment failed validation."""


class ImageTooSmall(CodecError):
    """Image cannot be padded to the codec's minimum tile size."""


class TrainingDiverged(CodecError):
    """Loss or a gradient became non-finite; carries the offending step."""

    def __init__(self, step, message):
        super().__init__(f"step {step}: {message}")
        self.step = step
