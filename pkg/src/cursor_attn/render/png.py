"""Minimal deterministic PNG writer.

Writes 8-bit RGBA with filter type 0 on every row and a fixed zlib level,
so identical pixel content always yields identical bytes.
"""

from __future__ import annotations

import struct
import zlib

from .canvas import ImageBuffer

_SIGNATURE = b"\x89PNG\r\n\x1a\n"
_ZLIB_LEVEL = 6


def _chunk(tag: bytes, data: bytes) -> bytes:
    crc = zlib.crc32(tag)
    crc = zlib.crc32(data, crc)
    return struct.pack(">I", len(data)) + tag + data + struct.pack(">I", crc)


def encode_png(buf: ImageBuffer) -> bytes:
    """Encode the canvas as a deterministic 8-bit RGBA PNG byte string."""
    h, w = buf.pixels.shape[:2]
    header = struct.pack(">IIBBBBB", w, h, 8, 6, 0, 0, 0)
    raw = bytearray()
    pixel_bytes = buf.pixels.tobytes()
    stride = w * 4
    for y in range(h):
        raw.append(0)
        raw += pixel_bytes[y * stride : (y + 1) * stride]
    return (
        _SIGNATURE
        + _chunk(b"IHDR", header)
        + _chunk(b"IDAT", zlib.compress(bytes(raw), _ZLIB_LEVEL))
        + _chunk(b"IEND", b"")
    )
