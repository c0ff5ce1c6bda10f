"""Binary Netpbm I/O: 8-bit PGM (P5) and PPM (P6).

Only maxval 255 is accepted. Header tokens may be separated by any
whitespace and ``#`` comments, as the Netpbm format allows.
"""

from __future__ import annotations

import os
from pathlib import Path

import numpy as np

from .errors import ImageFormatError


def _parse_header(data: bytes) -> tuple[bytes, int, int, int, int]:
    tokens: list[bytes] = []
    pos = 0
    n = len(data)
    while len(tokens) < 4:
        while pos < n and data[pos : pos + 1].isspace():
            pos += 1
        if pos < n and data[pos : pos + 1] == b"#":
            while pos < n and data[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < n and not data[pos : pos + 1].isspace() and data[pos : pos + 1] != b"#":
            pos += 1
        if start == pos:
            raise ImageFormatError("truncated Netpbm header")
        tokens.append(data[start:pos])
    # exactly one whitespace byte separates the header from the raster
    if pos >= n or not data[pos : pos + 1].isspace():
        raise ImageFormatError("missing whitespace after Netpbm header")
    pos += 1
    magic = tokens[0]
    try:
        width, height, maxval = (int(t) for t in tokens[1:])
    except ValueError as exc:
        raise ImageFormatError(f"non-numeric Netpbm header field: {exc}") from None
    return magic, width, height, maxval, pos


def decode(data: bytes) -> np.ndarray:
    """Decode P5/P6 bytes. Returns ``(H, W)`` or ``(H, W, 3)`` uint8."""
    if len(data) < 2 or data[:2] not in (b"P5", b"P6"):
        raise ImageFormatError("not a binary PGM/PPM file (expected P5 or P6)")
    magic, width, height, maxval, offset = _parse_header(data)
    if width <= 0 or height <= 0:
        raise ImageFormatError(f"invalid dimensions {width}x{height}")
    if maxval != 255:
        raise ImageFormatError(f"unsupported maxval {maxval} (only 255)")
    channels = 3 if magic == b"P6" else 1
    size = width * height * channels
    raster = data[offset : offset + size]
    if len(raster) != size:
        raise ImageFormatError(f"truncated raster: expected {size} bytes, got {len(raster)}")
    arr = np.frombuffer(raster, dtype=np.uint8)
    if channels == 3:
        return arr.reshape(height, width, 3).copy()
    return arr.reshape(height, width).copy()


def encode(image: np.ndarray) -> bytes:
    image = np.asarray(image)
    if image.dtype != np.uint8:
        raise ImageFormatError(f"expected uint8 raster, got {image.dtype}")
    if image.ndim == 2:
        magic = b"P5"
    elif image.ndim == 3 and image.shape[2] == 3:
        magic = b"P6"
    else:
        raise ImageFormatError(f"unsupported raster shape {image.shape}")
    height, width = image.shape[:2]
    header = magic + b"\n%d %d\n255\n" % (width, height)
    return header + np.ascontiguousarray(image).tobytes()


def read(path: str | os.PathLike) -> np.ndarray:
    return decode(Path(path).read_bytes())


def read_gray(path: str | os.PathLike) -> np.ndarray:
    """Read a PGM or PPM file and return a grayscale raster."""
    from .imaging import to_grayscale

    image = read(path)
    if image.ndim == 3:
        return to_grayscale(image)
    return image


def write(path: str | os.PathLike, image: np.ndarray) -> None:
    Path(path).write_bytes(encode(image))
