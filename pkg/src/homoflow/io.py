"""File formats used by the command-line tool.

1-D signals are single-column CSV, 2-D images are binary PGM. Filtered
images are written as 16-bit PGM together with a ``.json`` sidecar holding
the affine map back to floating point. Decompositions are JSON. Every float
written as text uses 17 significant digits, which round-trips doubles.
"""

import json
import math
from pathlib import Path

import numpy as np

from .exceptions import InvalidInputError
from .orthons import OrthoNsDecomposition

__all__ = [
    "read_signal",
    "write_signal",
    "read_csv",
    "write_csv",
    "read_pgm",
    "write_pgm",
    "write_pgm16",
    "decomposition_to_dict",
    "decomposition_from_dict",
    "save_decomposition",
    "load_decomposition",
]

FLOAT_FMT = "%.17g"


def write_csv(path, x):
    """1-D arrays as one column; 2-D arrays as a comma-separated matrix."""
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        np.savetxt(path, x[:, None], fmt=FLOAT_FMT)
    elif x.ndim == 2:
        np.savetxt(path, x, fmt=FLOAT_FMT, delimiter=",")
    else:
        raise InvalidInputError("only 1-D and 2-D arrays can be written as CSV")


def read_csv(path):
    """Inverse of :func:`write_csv`; a single column comes back 1-D."""
    x = np.loadtxt(path, delimiter=",", ndmin=2, dtype=float)
    if x.shape[1] == 1:
        return x[:, 0]
    return x


def _pgm_tokens(data, count):
    """Header tokens of a PGM file, skipping ``#`` comments."""
    tokens, pos = [], 0
    while len(tokens) < count:
        while pos < len(data) and chr(data[pos]).isspace():
            pos += 1
        if pos < len(data) and data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(data) and not chr(data[pos]).isspace():
            pos += 1
        if start == pos:
            raise InvalidInputError("truncated PGM header")
        tokens.append(data[start:pos].decode("ascii"))
    return tokens, pos + 1


def _sidecar(path):
    return Path(str(path) + ".json")


def read_pgm(path):
    """Binary PGM (``P5``) as floats.

    8-bit images map to ``[0, 1]``. 16-bit images are mapped back through the
    sidecar written by :func:`write_pgm16` when it exists, else to ``[0, 1]``.
    """
    data = Path(path).read_bytes()
    (magic, w, h, maxval), offset = _pgm_tokens(data, 4)
    if magic != "P5":
        raise InvalidInputError(f"{path}: only binary PGM (P5) is supported")
    w, h, maxval = int(w), int(h), int(maxval)
    if not 0 < maxval < 65536:
        raise InvalidInputError(f"{path}: bad maxval {maxval}")
    dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
    raw = np.frombuffer(data, dtype=dtype, count=w * h, offset=offset)
    img = raw.reshape(h, w).astype(float)
    side = _sidecar(path)
    if maxval > 255 and side.exists():
        meta = json.loads(side.read_text())
        return meta["offset"] + img * meta["scale"]
    return img / maxval


def _write_p5(path, img, maxval):
    h, w = img.shape
    dtype = ">u2" if maxval > 255 else "u1"
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n{maxval}\n".encode("ascii"))
        fh.write(img.astype(dtype).tobytes())


def write_pgm(path, img):
    """8-bit PGM of an image with values in ``[0, 1]`` (clipped)."""
    img = np.asarray(img, dtype=float)
    if img.ndim != 2:
        raise InvalidInputError("PGM images must be 2-D")
    _write_p5(path, np.rint(np.clip(img, 0.0, 1.0) * 255), 255)


def write_pgm16(path, img):
    """16-bit PGM plus a sidecar ``{"offset", "scale"}`` restoring float values."""
    img = np.asarray(img, dtype=float)
    if img.ndim != 2:
        raise InvalidInputError("PGM images must be 2-D")
    lo, hi = float(img.min()), float(img.max())
    scale = (hi - lo) / 65535.0 if hi > lo else 1.0
    _write_p5(path, np.rint((img - lo) / scale), 65535)
    _sidecar(path).write_text(json.dumps({"offset": lo, "scale": scale}))


def read_signal(path):
    """Dispatch on suffix: ``.pgm`` images, anything else CSV."""
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(path)
    if path.suffix.lower() == ".pgm":
        return read_pgm(path)
    return read_csv(path)


def write_signal(path, x, image16=True):
    """1-D arrays go to CSV. 2-D arrays go to 16-bit PGM, or to CSV when the suffix is ``.csv``."""
    path = Path(path)
    x = np.asarray(x, dtype=float)
    if x.ndim == 2 and path.suffix.lower() == ".pgm":
        (write_pgm16 if image16 else write_pgm)(path, x)
    else:
        write_csv(path, x)


def _finite_or_none(values):
    return [float(v) if math.isfinite(v) else None for v in np.asarray(values, dtype=float)]


def _none_to(values, fill):
    return np.array([fill if v is None else v for v in values], dtype=float)


def decomposition_to_dict(dec):
    """JSON-ready dict; modes are rows (one row per mode, row-major pixels)."""
    return {
        "p": float(dec.p),
        "delta": float(dec.delta) if math.isfinite(dec.delta) else None,
        "shape": list(dec.shape),
        "modes": [list(map(float, dec.modes[:, i])) for i in range(dec.rank)],
        "lambdas": _finite_or_none(dec.lambdas),
        "alphas": _finite_or_none(dec.alphas),
        "ext_times": _finite_or_none(dec.ext_times),
        "mus": _finite_or_none(dec.mus),
    }


def decomposition_from_dict(d):
    try:
        shape = tuple(d["shape"])
        r = len(d["alphas"])
        size = int(np.prod(shape))
        modes = np.array(d["modes"], dtype=float).reshape(r, size).T if r else np.zeros((size, 0))
        lambdas = _none_to(d["lambdas"], -np.inf)
        ext = np.array(d["ext_times"], dtype=object)
        physical = np.isfinite(lambdas)
        # a null extinction time is infinite for a zero eigenvalue, zero otherwise
        ext = np.array(
            [(math.inf if lam == 0 else 0.0) if t is None else t for t, lam in zip(ext, lambdas)],
            dtype=float,
        )
        return OrthoNsDecomposition(
            modes=modes,
            lambdas=lambdas,
            alphas=_none_to(d["alphas"], np.nan),
            ext_times=ext,
            p=float(d["p"]),
            delta=math.nan if d.get("delta") is None else float(d["delta"]),
            shape=shape,
            mus=_none_to(d.get("mus", [None] * r), np.nan),
            physical=physical,
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidInputError(f"malformed decomposition: {exc}") from exc


def save_decomposition(path, dec):
    # repr of a Python float is the shortest string that round-trips exactly
    Path(path).write_text(json.dumps(decomposition_to_dict(dec)))


def load_decomposition(path):
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(path)
    try:
        d = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise InvalidInputError(f"{path}: not valid JSON") from exc
    return decomposition_from_dict(d)
