"""Binary PGM (P5, maxval 255) reading and writing."""

from __future__ import annotations

from pathlib import Path

from .errors import MalformedPgm
from .image import GrayImage


def _header_tokens(data: bytes, path, count: int) -> tuple[list[bytes], int]:
    """Read ``count`` whitespace-separated header tokens, skipping ``#`` comments.

    Returns the tokens and the offset of the single whitespace byte that
    terminates the last one.
    """
    tokens = []
    pos = 0
    n = len(data)
    while len(tokens) < count:
        while pos < n and data[pos:pos + 1].isspace():
            pos += 1
        if pos >= n:
            raise MalformedPgm(path, "truncated header")
        if data[pos:pos + 1] == b"#":
            end = data.find(b"\n", pos)
            if end < 0:
                raise MalformedPgm(path, "unterminated comment in header")
            pos = end + 1
            continue
        start = pos
        while pos < n and not data[pos:pos + 1].isspace() and data[pos:pos + 1] != b"#":
            pos += 1
        tokens.append(data[start:pos])
    if pos >= n or not data[pos:pos + 1].isspace():
        raise MalformedPgm(path, "header not terminated by whitespace")
    return tokens, pos


def parse_pgm(data: bytes, path="<bytes>") -> GrayImage:
    tokens, pos = _header_tokens(data, path, 4)
    if tokens[0] != b"P5":
        raise MalformedPgm(path, f"unsupported magic {tokens[0]!r}, expected P5")
    try:
        width, height, maxval = (int(t) for t in tokens[1:])
    except ValueError:
        raise MalformedPgm(path, "non-integer size or maxval") from None
    if width <= 0 or height <= 0:
        raise MalformedPgm(path, f"bad size {width}x{height}")
    if maxval != 255:
        raise MalformedPgm(path, f"maxval {maxval} not supported, expected 255")
    raster = data[pos + 1:pos + 1 + width * height]
    if len(raster) != width * height:
        raise MalformedPgm(path, f"raster truncated: {len(raster)} of {width * height} bytes")
    return GrayImage.from_bytes(width, height, raster)


def read_pgm(path) -> GrayImage:
    path = Path(path)
    return parse_pgm(path.read_bytes(), path)


def encode_pgm(img: GrayImage, comment: str | None = None) -> bytes:
    header = b"P5\n"
    if comment:
        for line in comment.splitlines():
            header += b"# " + line.encode("ascii", "replace") + b"\n"
    header += f"{img.width} {img.height}\n255\n".encode("ascii")
    return header + img.data


def write_pgm(path, img: GrayImage, comment: str | None = None) -> None:
    Path(path).write_bytes(encode_pgm(img, comment))
