"""Deterministic box-and-label screen rendering.

Screenshots must be byte-identical across runs and platforms so recorded
trajectories can be compared against golden files, so this module avoids
system font stacks and image libraries entirely: text uses an embedded
5x7 bitmap font and files are written with a minimal PNG encoder on top
of zlib.
"""

from __future__ import annotations

import struct
import zlib

# 5x7 glyphs, 7 rows of 5 bits each, two hex digits per row, top to bottom.
_FONT = {
    " ": "00000000000000", "!": "04040404040004", '"': "0a0a0a00000000",
    "#": "0a0a1f0a1f0a0a", "$": "040f140e051e04", "%": "18190204081303",
    "&": "0c12140815120d", "'": "04040800000000", "(": "02040808080402",
    ")": "08040202020408", "*": "0004150e150400", "+": "0004041f040400",
    ",": "000000000c0408", "-": "0000001f000000", ".": "00000000000c0c",
    "/": "01010204081010", "0": "0e11131519110e", "1": "040c040404040e",
    "2": "0e11010204081f", "3": "1f02040201110e",
    "4": "02060a121f0202", "5": "1f101e0101110e", "6": "0608101e11110e",
    "7": "1f010204080808", "8": "0e11110e11110e", "9": "0e11110f01020c",
    ":": "000c0c000c0c00", ";": "000c0c000c0408", "<": "02040810080402",
    "=": "00001f001f0000", ">": "08040201020408", "?": "0e110102040004",
    "@": "0e11010d15150e", "A": "0e1111111f1111", "B": "1e11111e11111e",
    "C": "0e11101010110e", "D": "1c12111111121c", "E": "1f10101e10101f",
    "F": "1f10101e101010", "G": "0e11101711110f", "H": "1111111f111111",
    "I": "0e04040404040e", "J": "0702020202120c", "K": "11121418141211",
    "L": "1010101010101f", "M": "111b1515111111", "N": "11111915131111",
    "O": "0e11111111110e", "P": "1e11111e101010", "Q": "0e11111115120d",
    "R": "1e11111e141211", "S": "0f10100e01011e", "T": "1f040404040404",
    "U": "1111111111110e", "V": "11111111110a04", "W": "1111111515150a",
    "X": "11110a040a1111", "Y": "1111110a040404", "Z": "1f01020408101f",
    "[": "0e08080808080e", "\\": "10100804020101", "]": "0e02020202020e",
    "^": "040a1100000000", "_": "0000000000001f", "`": "08040200000000",
    "a": "00000e010f110f", "b": "1010161911111e", "c": "00000e1010110e",
    "d": "01010d1311110f", "e": "00000e111f100e", "f": "0609081c080808",
    "g": "000f11110f010e", "h": "10101619111111", "i": "04000c0404040e",
    "j": "0200060202120c", "k": "10101214181412", "l": "0c04040404040e",
    "m": "00001a15151111", "n": "00001619111111", "o": "00000e1111110e",
    "p": "00001e111e1010", "q": "00000d130f0101", "r": "00001619101010",
    "s": "00000e100e011e", "t": "08081c08080906", "u": "0000111111130d",
    "v": "00001111110a04", "w": "0000111115150a", "x": "0000110a040a11",
    "y": "000011110f010e", "z": "00001f0204081f", "{": "06080810080806",
    "|": "04040404040404", "}": "0c02020102020c", "~": "00000815020000",
}
_UNKNOWN = "1f11111111111f"  # hollow box for glyphs outside the table

GLYPH_W = 6  # 5 pixels + 1 spacing column
GLYPH_H = 8  # 7 pixels + 1 spacing row


def _glyph_rows(ch: str) -> list[int]:
    packed = _FONT.get(ch, _UNKNOWN)
    return [int(packed[i : i + 2], 16) for i in range(0, 14, 2)]


class Canvas:
    """Fixed-size RGB raster with rectangle and bitmap-text primitives."""

    def __init__(self, width: int, height: int, background: tuple[int, int, int] = (245, 245, 245)):
        self.width = width
        self.height = height
        self.pixels = bytearray(bytes(background) * (width * height))

    def _put(self, x: int, y: int, color: tuple[int, int, int]) -> None:
        if 0 <= x < self.width and 0 <= y < self.height:
            offset = (y * self.width + x) * 3
            self.pixels[offset : offset + 3] = bytes(color)

    def fill_rect(self, box: tuple[int, int, int, int], color: tuple[int, int, int]) -> None:
        left, top, right, bottom = box
        for y in range(max(top, 0), min(bottom, self.height)):
            offset = (y * self.width + max(left, 0)) * 3
            span = min(right, self.width) - max(left, 0)
            if span > 0:
                self.pixels[offset : offset + span * 3] = bytes(color) * span

    def rect(self, box: tuple[int, int, int, int], color: tuple[int, int, int]) -> None:
        left, top, right, bottom = box
        for x in range(left, right):
            self._put(x, top, color)
            self._put(x, bottom - 1, color)
        for y in range(top, bottom):
            self._put(left, y, color)
            self._put(right - 1, y, color)

    def text(
        self,
        x: int,
        y: int,
        string: str,
        color: tuple[int, int, int] = (20, 20, 20),
        max_width: int | None = None,
    ) -> None:
        cursor = x
        for ch in string:
            if max_width is not None and cursor + GLYPH_W > x + max_width:
                break
            for row, bits in enumerate(_glyph_rows(ch)):
                for col in range(5):
                    if bits & (1 << (4 - col)):
                        self._put(cursor + col, y + row, color)
            cursor += GLYPH_W

    def to_png(self) -> bytes:
        return write_png(self.width, self.height, bytes(self.pixels))


def _chunk(tag: bytes, payload: bytes) -> bytes:
    return (
        struct.pack(">I", len(payload))
        + tag
        + payload
        + struct.pack(">I", zlib.crc32(tag + payload) & 0xFFFFFFFF)
    )


def write_png(width: int, height: int, rgb: bytes) -> bytes:
    """Encode raw RGB bytes as a PNG with fixed, reproducible settings."""
    if len(rgb) != width * height * 3:
        raise ValueError("rgb buffer does not match dimensions")
    header = struct.pack(">IIBBBBB", width, height, 8, 2, 0, 0, 0)
    stride = width * 3
    raw = b"".join(
        b"\x00" + rgb[y * stride : (y + 1) * stride] for y in range(height)
    )
    return (
        b"\x89PNG\r\n\x1a\n"
        + _chunk(b"IHDR", header)
        + _chunk(b"IDAT", zlib.compress(raw, 9))
        + _chunk(b"IEND", b"")
    )


_KIND_COLORS = {
    "button": (66, 103, 178),
    "text_field": (120, 120, 120),
    "list_item": (160, 160, 160),
    "icon": (214, 129, 48),
    "static_text": (200, 200, 200),
}


def render_screen(
    width: int,
    height: int,
    title: str,
    elements: list[dict],
) -> bytes:
    """Render a page as labelled boxes; ``elements`` use sim-truth dicts."""
    canvas = Canvas(width, height)
    canvas.fill_rect((0, 0, width, 20), (40, 40, 40))
    canvas.text(6, 6, title, color=(240, 240, 240), max_width=width - 12)
    for element in elements:
        left, top, right, bottom = element["box"]
        color = _KIND_COLORS.get(element["kind"], (0, 0, 0))
        if element["kind"] == "text_field":
            canvas.fill_rect((left, top, right, bottom), (255, 255, 255))
        canvas.rect((left, top, right, bottom), color)
        canvas.text(left + 3, top + 3, element["label"], max_width=right - left - 6)
        if element.get("content"):
            canvas.text(
                left + 3,
                top + 3 + GLYPH_H,
                element["content"],
                color=(90, 90, 90),
                max_width=right - left - 6,
            )
    return canvas.to_png()
