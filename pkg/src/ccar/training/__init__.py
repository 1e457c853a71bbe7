from .config import TrainConfig, lambda_at, loss, lr_at
from .configfile import parse_config_file, parse_config_text, write_config_file
from .data import DataPipeline, area_resize, load_image_dir, synthetic_textures
from .loop import train

__all__ = [
    "DataPipeline",
    "TrainConfig",
    "area_resize",
    "lambda_at",
    "load_image_dir",
    "loss",
    "lr_at",
    "parse_config_file",
    "parse_config_text",
    "synthetic_textures",
    "train",
    "write_config_file",
]
