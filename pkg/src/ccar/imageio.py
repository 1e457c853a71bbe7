"""8-bit image I/O: PNG via Pillow, binary PPM (P6) natively.

Images are (3, H, W) uint8 arrays everywhere in this package.
"""

import numpy as np
from PIL import Image

from .errors import MalformedBitstream, ShapeError


def read_image(path):
    if str(path).lower().endswith(".ppm"):
        return _read_ppm(path)
    with Image.open(path) as im:
        arr = np.asarray(im.convert("RGB"))
    return np.ascontiguousarray(arr.transpose(2, 0, 1))


def write_image(path, img):
    img = np.asarray(img)
    if img.ndim != 3 or img.shape[0] != 3 or img.dtype != np.uint8:
        raise ShapeError(f"expected (3, H, W) uint8 image, got {img.shape} {img.dtype}")
    if str(path).lower().endswith(".ppm"):
        _write_ppm(path, img)
    else:
        Image.fromarray(img.transpose(1, 2, 0)).save(path, format="PNG")


def _read_ppm(path):
    with open(path, "rb") as f:
        data = f.read()
    fields = []
    pos = 0
    while len(fields) < 4:
        while pos < len(data) and data[pos] in b" \t\r\n":
            pos += 1
        if pos < len(data) and data[pos:pos + 1] == b"#":
            while pos < len(data) and data[pos] not in b"\r\n":
                pos += 1
            continue
        start = pos
        while pos < len(data) and data[pos] not in b" \t\r\n":
            pos += 1
        fields.append(data[start:pos])
    if fields[0] != b"P6":
        raise MalformedBitstream(f"{path}: not a binary PPM")
    w, h, maxval = int(fields[1]), int(fields[2]), int(fields[3])
    if maxval != 255:
        raise MalformedBitstream(f"{path}: only maxval 255 PPMs are supported")
    pos += 1  # single whitespace after maxval
    raw = data[pos:pos + 3 * w * h]
    if len(raw) != 3 * w * h:
        raise MalformedBitstream(f"{path}: truncated pixel data")
    return np.frombuffer(raw, dtype=np.uint8).reshape(h, w, 3).transpose(2, 0, 1).copy()


def _write_ppm(path, img):
    _, h, w = img.shape
    with open(path, "wb") as f:
        f.write(f"P6\n{w} {h}\n255\n".encode("ascii"))
        f.write(img.transpose(1, 2, 0).tobytes())
