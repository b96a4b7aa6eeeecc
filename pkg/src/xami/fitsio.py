"""Minimal FITS reader for single-HDU full-frame images.

Supports exactly what the OM full-frame products need: a primary header
(80-char cards in 2880-byte blocks), BITPIX in {8, 16, 32, -32, -64},
NAXIS=2, optional BSCALE/BZERO, big-endian payload. No extensions, no
tile compression, no WCS.
"""

from __future__ import annotations

import numpy as np

BLOCK = 2880
CARD = 80
CARDS_PER_BLOCK = BLOCK // CARD

_DTYPES = {
    8: np.dtype(">u1"),
    16: np.dtype(">i2"),
    32: np.dtype(">i4"),
    -32: np.dtype(">f4"),
    -64: np.dtype(">f8"),
}


class FitsParseError(ValueError):
    """Base error for malformed FITS streams."""


class MalformedCardError(FitsParseError):
    """A header card could not be parsed."""


class UnsupportedBitpixError(FitsParseError):
    """BITPIX outside {8, 16, 32, -32, -64}."""


class DimensionError(FitsParseError):
    """NAXIS is not 2 or an axis length is invalid."""


class TruncatedDataError(FitsParseError):
    """Stream ends before the header or data unit is complete."""


def _parse_value(text: str, keyword: str, offset: int):
    """Parse the value field of a fixed/free-format card (subset)."""
    body = text[10:]
    # strip inline comment; quotes do not occur in the keywords we need,
    # but handle them so string cards don't trip the slash scan
    if body.lstrip().startswith("'"):
        start = body.index("'")
        end = body.find("'", start + 1)
        if end < 0:
            raise MalformedCardError(
                f"unterminated string in card {keyword!r} at offset {offset}"
            )
        return body[start + 1 : end].rstrip()
    slash = body.find("/")
    token = (body[:slash] if slash >= 0 else body).strip()
    if token == "T":
        return True
    if token == "F":
        return False
    if not token:
        raise MalformedCardError(f"empty value in card {keyword!r} at offset {offset}")
    try:
        return int(token)
    except ValueError:
        pass
    try:
        return float(token.replace("D", "E").replace("d", "e"))
    except ValueError:
        raise MalformedCardError(
            f"unparseable value {token!r} in card {keyword!r} at offset {offset}"
        ) from None


def _parse_header(data: bytes) -> tuple[dict, int]:
    """Return (cards, data_offset). Raises on malformed/truncated headers."""
    cards: dict = {}
    offset = 0
    first = True
    while True:
        if offset + BLOCK > len(data):
            raise TruncatedDataError(
                f"header block at offset {offset} runs past end of stream "
                f"({len(data)} bytes) without an END card"
            )
        block = data[offset : offset + BLOCK]
        for i in range(CARDS_PER_BLOCK):
            raw = block[i * CARD : (i + 1) * CARD]
            card_offset = offset + i * CARD
            try:
                text = raw.decode("ascii")
            except UnicodeDecodeError:
                raise MalformedCardError(
                    f"non-ASCII header card at offset {card_offset}"
                ) from None
            keyword = text[:8].strip()
            if first:
                if keyword != "SIMPLE" or text[8:10] != "= ":
                    raise MalformedCardError(
                        f"first card must be 'SIMPLE = T', got {text[:30]!r}"
                    )
                if _parse_value(text, "SIMPLE", 0) is not True:
                    raise MalformedCardError("SIMPLE is not T; not a standard FITS file")
                first = False
                cards["SIMPLE"] = True
                continue
            if keyword == "END":
                return cards, offset + BLOCK
            if keyword in ("", "COMMENT", "HISTORY"):
                continue
            if text[8:10] != "= ":
                continue  # commentary keyword without value indicator
            if keyword not in cards:
                cards[keyword] = _parse_value(text, keyword, card_offset)
        offset += BLOCK


def read_fits(data: bytes) -> np.ndarray:
    """Decode the primary HDU of a FITS byte stream into a float64 grid.

    Returns an (height, width) array with BSCALE/BZERO applied
    (value = BZERO + BSCALE * raw). Non-finite pixels are replaced by the
    finite minimum of the frame so downstream scaling stays well-defined.
    """
    cards, data_offset = _parse_header(bytes(data))

    try:
        bitpix = int(cards["BITPIX"])
        naxis = int(cards["NAXIS"])
    except KeyError as exc:
        raise MalformedCardError(f"missing required card {exc.args[0]}") from None
    if bitpix not in _DTYPES:
        raise UnsupportedBitpixError(f"unsupported BITPIX {bitpix}")
    if naxis != 2:
        raise DimensionError(f"NAXIS must be 2 for full-frame images, got {naxis}")
    try:
        width = int(cards["NAXIS1"])
        height = int(cards["NAXIS2"])
    except KeyError as exc:
        raise MalformedCardError(f"missing required card {exc.args[0]}") from None
    if width < 1 or height < 1:
        raise DimensionError(f"invalid axis lengths NAXIS1={width} NAXIS2={height}")

    bscale = float(cards.get("BSCALE", 1.0))
    bzero = float(cards.get("BZERO", 0.0))

    dtype = _DTYPES[bitpix]
    nbytes = dtype.itemsize * width * height
    payload = data[data_offset : data_offset + nbytes]
    if len(payload) < nbytes:
        raise TruncatedDataError(
            f"data unit truncated: expected {nbytes} bytes at offset "
            f"{data_offset}, got {len(payload)}"
        )

    raw = np.frombuffer(payload, dtype=dtype).reshape(height, width)
    grid = bzero + bscale * raw.astype(np.float64)

    finite = np.isfinite(grid)
    if not finite.all():
        if not finite.any():
            raise FitsParseError("frame contains no finite pixels")
        grid = np.where(finite, grid, grid[finite].min())
    return grid
