"""Plain-text file formats for dense tensors (.ten), tensor trains (.tt) and MPOs (.mpo).

Values are written one per line with 17 significant digits, which round-trips
every float64 exactly, so printing a parsed canonical file reproduces it byte for byte.
"""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np

from .network import TNGraph, parse_spec
from .tt import MPO, TT


class FormatError(ValueError):
    pass


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _values(arr: np.ndarray) -> list[str]:
    return [_fmt(v) for v in np.asarray(arr, dtype=np.float64).ravel()]


def _ints(line: str, what: str) -> list[int]:
    try:
        vals = [int(t) for t in line.split()]
    except ValueError:
        raise FormatError(f"bad {what} line: {line!r}") from None
    if any(v < 0 for v in vals):
        raise FormatError(f"negative size in {what} line: {line!r}")
    return vals


def _floats(tokens: list[str], where: str) -> np.ndarray:
    try:
        vals = np.array([float(t) for t in tokens], dtype=np.float64)
    except ValueError as e:
        raise FormatError(f"{where}: {e}") from None
    if not np.all(np.isfinite(vals)):
        raise FormatError(f"{where}: non-finite value")
    return vals


def _lines(text: str) -> list[str]:
    return [ln for ln in text.splitlines() if ln.strip()]


# ---------------------------------------------------------------- dense

def format_tensor(T: np.ndarray) -> str:
    T = np.asarray(T, dtype=np.float64)
    if not np.all(np.isfinite(T)):
        raise FormatError("cannot write non-finite values")
    return "\n".join(["TEN 1", " ".join(str(d) for d in T.shape), *_values(T)]) + "\n"


def parse_tensor(text: str) -> np.ndarray:
    # blank lines are kept here: a scalar has an empty shape line
    lines = text.splitlines()
    if not lines or lines[0].split() != ["TEN", "1"]:
        raise FormatError("tensor file must start with 'TEN 1'")
    if len(lines) < 2:
        raise FormatError("tensor file has no shape line")
    shape = _ints(lines[1], "shape")
    vals = _floats(" ".join(lines[2:]).split(), "tensor values")
    if vals.size != math.prod(shape):
        raise FormatError(f"shape {tuple(shape)} needs {math.prod(shape)} values, found {vals.size}")
    return vals.reshape(shape)


# ---------------------------------------------------------------- TT / MPO

def _format_cores(magic: str, cores) -> str:
    out = [magic, str(len(cores))]
    for k, c in enumerate(cores, start=1):
        if not np.all(np.isfinite(c)):
            raise FormatError("cannot write non-finite values")
        out.append("CORE " + " ".join(str(v) for v in (k, *c.shape)))
        out += _values(c)
    return "\n".join(out) + "\n"


def _parse_cores(text: str, magic: str, order: int) -> list[np.ndarray]:
    lines = _lines(text)
    if not lines or lines[0].split() != magic.split():
        raise FormatError(f"file must start with {magic!r}")
    if len(lines) < 2:
        raise FormatError("missing site count")
    count = _ints(lines[1], "site count")
    if len(count) != 1 or count[0] < 1:
        raise FormatError(f"bad site count line: {lines[1]!r}")
    n = count[0]
    cores, pos = [], 2
    for k in range(1, n + 1):
        if pos >= len(lines):
            raise FormatError(f"missing header for core {k}")
        head = lines[pos].split()
        if len(head) != order + 2 or head[0] != "CORE":
            raise FormatError(f"bad core header: {lines[pos]!r}")
        nums = _ints(" ".join(head[1:]), "core header")
        if nums[0] != k:
            raise FormatError(f"expected core {k}, found core {nums[0]}")
        shape = nums[1:]
        size = math.prod(shape)
        body = lines[pos + 1: pos + 1 + size]
        if len(body) != size:
            raise FormatError(f"core {k} needs {size} values, found {len(body)}")
        cores.append(_floats(body, f"core {k}").reshape(shape))
        pos += 1 + size
    if pos != len(lines):
        raise FormatError("trailing content after the last core")
    return cores


def format_tt(t: TT) -> str:
    return _format_cores("TT 1", t.cores)


def parse_tt(text: str) -> TT:
    try:
        return TT(tuple(_parse_cores(text, "TT 1", 3)))
    except FormatError:
        raise
    except ValueError as e:
        raise FormatError(str(e)) from None


def format_mpo(m: MPO) -> str:
    return _format_cores("MPO 1", m.cores)


def parse_mpo(text: str) -> MPO:
    try:
        return MPO(tuple(_parse_cores(text, "MPO 1", 4)))
    except FormatError:
        raise
    except ValueError as e:
        raise FormatError(str(e)) from None


# ---------------------------------------------------------------- networks

def format_network(g: TNGraph) -> str:
    return str(g) + "\n"


def parse_network(text: str) -> TNGraph:
    return parse_spec(text)


# ---------------------------------------------------------------- files

_READERS = {".ten": parse_tensor, ".tt": parse_tt, ".mpo": parse_mpo, ".tn": parse_network}
_WRITERS = {np.ndarray: format_tensor, TT: format_tt, MPO: format_mpo, TNGraph: format_network}


def load(path: str | Path):
    path = Path(path)
    reader = _READERS.get(path.suffix)
    if reader is None:
        raise FormatError(f"unknown file type {path.suffix!r} (expected .ten, .tt, .mpo or .tn)")
    return reader(path.read_text(encoding="utf-8"))


def dumps(obj) -> str:
    for typ, writer in _WRITERS.items():
        if isinstance(obj, typ):
            return writer(obj)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def save(path: str | Path, obj) -> None:
    Path(path).write_text(dumps(obj), encoding="utf-8")
