"""PNG (8/16-bit), binary PPM (P6) and ``.npy`` image readers/writers.

Readers return float64 arrays scaled to [0, 1] together with the source
bit depth; ``.npy`` files are returned verbatim with bit depth ``None``.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
import png

from .errors import MissingFile, ParseError

#: Lab <-> 16-bit PNG encoding: L in [0, 100], a and b in [-128, 128).
LAB_OFFSET = np.array([0.0, 128.0, 128.0])
LAB_RANGE = np.array([100.0, 256.0, 256.0])


def _check(path) -> Path:
    path = Path(path)
    if not path.is_file():
        raise MissingFile(path)
    return path


def read_png(path):
    path = _check(path)
    try:
        w, h, rows, info = png.Reader(filename=str(path)).asDirect()
        data = np.vstack([np.asarray(r, dtype=np.uint32) for r in rows])
    except png.Error as exc:
        raise ParseError(f"{path}: {exc}") from exc
    planes = info["planes"]
    data = data.reshape(h, w, planes)
    if info.get("alpha"):
        data = data[..., :-1]
    depth = info["bitdepth"]
    return data.astype(np.float64) / (2**depth - 1), depth


def write_png(path, arr, bitdepth: int = 8):
    arr = np.asarray(arr, dtype=np.float64)
    maxv = 2**bitdepth - 1
    q = np.round(np.clip(arr, 0.0, 1.0) * maxv).astype(np.uint16 if bitdepth > 8 else np.uint8)
    greyscale = q.ndim == 2 or q.shape[2] == 1
    h, w = q.shape[:2]
    rows = q.reshape(h, -1)
    writer = png.Writer(w, h, greyscale=greyscale, bitdepth=bitdepth)
    with open(path, "wb") as fh:
        writer.write(fh, rows.tolist())


def _ppm_tokens(buf: bytes, count: int):
    tokens, pos = [], 2
    while len(tokens) < count:
        while pos < len(buf) and buf[pos:pos + 1].isspace():
            pos += 1
        if buf[pos:pos + 1] == b"#":
            while pos < len(buf) and buf[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(buf) and not buf[pos:pos + 1].isspace():
            pos += 1
        if start == pos:
            raise ParseError("truncated PPM header")
        tokens.append(int(buf[start:pos]))
    return tokens, pos + 1


def read_ppm(path):
    path = _check(path)
    buf = path.read_bytes()
    if buf[:2] != b"P6":
        raise ParseError(f"{path}: not a binary PPM (P6) file")
    try:
        (w, h, maxval), start = _ppm_tokens(buf, 3)
    except ValueError as exc:
        raise ParseError(f"{path}: bad PPM header") from exc
    dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
    n = w * h * 3
    data = np.frombuffer(buf, dtype=dtype, count=n, offset=start)
    if data.size != n:
        raise ParseError(f"{path}: truncated PPM data")
    depth = 16 if maxval > 255 else 8
    return data.reshape(h, w, 3).astype(np.float64) / maxval, depth


def write_ppm(path, arr, bitdepth: int = 8):
    arr = np.asarray(arr, dtype=np.float64)
    h, w = arr.shape[:2]
    maxv = 2**bitdepth - 1
    dtype = ">u2" if bitdepth > 8 else "u1"
    q = np.round(np.clip(arr, 0.0, 1.0) * maxv).astype(dtype)
    with open(path, "wb") as fh:
        fh.write(f"P6\n{w} {h}\n{maxv}\n".encode("ascii"))
        fh.write(q.tobytes())


def read_image(path):
    """Return ``(array, bitdepth)``; colour arrays are (H, W, 3)."""
    path = Path(path)
    suffix = path.suffix.lower()
    if suffix == ".npy":
        return np.load(_check(path)).astype(np.float64), None
    if suffix == ".png":
        arr, depth = read_png(path)
    elif suffix in (".ppm", ".pnm"):
        arr, depth = read_ppm(path)
    else:
        raise ParseError(f"{path}: unsupported image format {suffix!r}")
    if arr.ndim == 3 and arr.shape[2] == 1:
        arr = np.repeat(arr, 3, axis=2)
    return arr, depth


def write_image(path, arr, bitdepth: int = 8):
    path = Path(path)
    suffix = path.suffix.lower()
    if suffix == ".npy":
        np.save(path, np.asarray(arr, dtype=np.float64))
    elif suffix == ".png":
        write_png(path, arr, bitdepth)
    elif suffix in (".ppm", ".pnm"):
        write_ppm(path, arr, bitdepth)
    else:
        raise ParseError(f"{path}: unsupported image format {suffix!r}")


def read_mask(path) -> np.ndarray:
    """Integer label image (H, W)."""
    path = Path(path)
    if path.suffix.lower() == ".npy":
        m = np.load(_check(path))
    else:
        _check(path)
        try:
            w, h, rows, info = png.Reader(filename=str(path)).asDirect()
            m = np.vstack([np.asarray(r, dtype=np.int64) for r in rows]).reshape(h, w, info["planes"])
        except png.Error as exc:
            raise ParseError(f"{path}: {exc}") from exc
        m = m[..., 0]
    return np.asarray(m).astype(np.int64)


def write_mask(path, mask):
    mask = np.asarray(mask)
    if mask.min() < 0 or mask.max() > 255:
        raise ValueError("mask values must fit in 8 bits")
    rows = mask.astype(np.uint8)
    writer = png.Writer(rows.shape[1], rows.shape[0], greyscale=True, bitdepth=8)
    with open(path, "wb") as fh:
        writer.write(fh, rows.tolist())


def encode_lab(lab) -> np.ndarray:
    return (np.asarray(lab, dtype=np.float64) + LAB_OFFSET) / LAB_RANGE


def decode_lab(arr) -> np.ndarray:
    return np.asarray(arr, dtype=np.float64) * LAB_RANGE - LAB_OFFSET
