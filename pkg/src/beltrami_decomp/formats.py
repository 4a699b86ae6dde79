"""On-disk formats: CMX1 complex matrices, binary PGM frames, history CSV.

CMX1 layout: the magic ``b"CMX1"``, two little-endian uint64 (rows, cols),
then ``rows * cols`` entries in column-major order, each stored as two
little-endian float64 (real, imaginary).
"""

import csv
import io
import os
import re
import struct

import numpy as np

from .errors import FormatError

MAGIC = b"CMX1"
_HEADER = struct.Struct("<4sQQ")
_ENTRY = np.dtype("<c16")


def write_matrix(path, matrix):
    matrix = np.asarray(matrix)
    if matrix.ndim != 2:
        raise FormatError(f"expected a 2-D matrix, got {matrix.ndim}-D")
    rows, cols = matrix.shape
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, rows, cols))
        fh.write(np.asarray(matrix, dtype=_ENTRY).tobytes(order="F"))


def read_matrix(path):
    with open(path, "rb") as fh:
        data = fh.read()
    return decode_matrix(data)


def decode_matrix(data):
    if len(data) < _HEADER.size:
        raise FormatError(f"CMX1 file truncated: {len(data)} bytes, header needs {_HEADER.size}")
    magic, rows, cols = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}, expected {MAGIC!r}")
    expected = _HEADER.size + rows * cols * _ENTRY.itemsize
    if len(data) != expected:
        raise FormatError(f"CMX1 size mismatch: {rows}x{cols} needs {expected} bytes, got {len(data)}")
    flat = np.frombuffer(data, dtype=_ENTRY, offset=_HEADER.size, count=rows * cols)
    return flat.reshape((rows, cols), order="F").astype(complex)


_PGM_HEADER = re.compile(rb"\AP5\s+(?:#[^\n]*\n\s*)*(\d+)\s+(?:#[^\n]*\n\s*)*(\d+)\s+(?:#[^\n]*\n\s*)*(\d+)\s")


def write_pgm(path, image):
    """Write an 8-bit binary PGM; row 0 of ``image`` is written first."""
    image = np.asarray(image)
    if image.ndim != 2:
        raise FormatError("PGM frames must be 2-D")
    if image.dtype != np.uint8:
        image = np.clip(np.rint(image), 0, 255).astype(np.uint8)
    h, w = image.shape
    with open(path, "wb") as fh:
        fh.write(b"P5\n%d %d\n255\n" % (w, h))
        fh.write(np.ascontiguousarray(image).tobytes())


def read_pgm(path):
    with open(path, "rb") as fh:
        data = fh.read()
    return decode_pgm(data)


def decode_pgm(data):
    match = _PGM_HEADER.match(data)
    if match is None:
        raise FormatError("not a binary (P5) PGM file")
    w, h, maxval = (int(g) for g in match.groups())
    if maxval != 255:
        raise FormatError(f"only 8-bit PGM supported, maxval={maxval}")
    body = data[match.end():]
    if len(body) != w * h:
        raise FormatError(f"PGM payload has {len(body)} bytes, expected {w * h}")
    return np.frombuffer(body, dtype=np.uint8).reshape(h, w).copy()


def frame_name(index, total):
    width = max(4, len(str(max(total - 1, 0))))
    return f"{index:0{width}d}.pgm"


def write_frames(directory, frames):
    os.makedirs(directory, exist_ok=True)
    paths = []
    for i, frame in enumerate(frames):
        path = os.path.join(directory, frame_name(i, len(frames)))
        write_pgm(path, frame)
        paths.append(path)
    return paths


def read_frames(directory):
    names = sorted(f for f in os.listdir(directory) if f.endswith(".pgm"))
    return [read_pgm(os.path.join(directory, f)) for f in names]


HISTORY_HEADER = ["iter", "residual", "rank", "nnz", "beta", "amax"]


def history_csv(history):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(HISTORY_HEADER)
    for rec in history:
        writer.writerow([rec.iter, repr(rec.residual), rec.rank, rec.nnz, repr(rec.beta), repr(rec.amax)])
    return buf.getvalue()


def write_history(path, history):
    with open(path, "w", newline="") as fh:
        fh.write(history_csv(history))


def read_history(path):
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != HISTORY_HEADER:
            raise FormatError(f"unexpected history header {reader.fieldnames}")
        return [
            {"iter": int(r["iter"]), "residual": float(r["residual"]), "rank": int(r["rank"]),
             "nnz": int(r["nnz"]), "beta": float(r["beta"]), "amax": float(r["amax"])}
            for r in reader
        ]


def read_spec_file(path):
    """Parse a flat ``key = value`` file; ``#`` starts a comment."""
    out = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise FormatError(f"{path}:{lineno}: expected 'key = value'")
            key, value = (s.strip() for s in line.split("=", 1))
            out[key] = value
    return out
