"""JSON interchange for complexes and certification reports.

A complex file is a JSON object
``{"version": 1, "dimension_m": m, "ambient_N": N, "vertices": [[...]], "simplices": [[...]]}``
with simplex rows sorted ascending, indices in range and finite coordinates.
Floats are written with the shortest repr that round-trips, so a
write/read cycle reproduces vertex coordinates bit for bit.
"""
from __future__ import annotations

import json
import os

import numpy as np

from .complex import GeometricComplex
from .errors import ComplexFileError

FORMAT_VERSION = 1
_KEYS = {"version", "dimension_m", "ambient_N", "vertices", "simplices"}


def complex_to_dict(A: GeometricComplex) -> dict:
    return {"version": FORMAT_VERSION, "dimension_m": int(A.dimension_m), "ambient_N": int(A.vertices.shape[1]),
            "vertices": A.vertices.tolist(), "simplices": A.simplices.astype(np.int64).tolist()}


def dumps_complex(A: GeometricComplex) -> str:
    if not np.isfinite(A.vertices).all():
        raise ComplexFileError("vertex coordinates must be finite")
    d = complex_to_dict(A)
    # one vertex / simplex per line keeps large files diffable without the cost of indent=2
    rows_v = ",\n".join(json.dumps(v, allow_nan=False) for v in d["vertices"])
    rows_s = ",\n".join(json.dumps(s) for s in d["simplices"])
    return (f'{{"version": {d["version"]}, "dimension_m": {d["dimension_m"]}, "ambient_N": {d["ambient_N"]},\n'
            f'"vertices": [\n{rows_v}\n],\n"simplices": [\n{rows_s}\n]}}\n')


def _check(cond, msg):
    if not cond:
        raise ComplexFileError(msg)


def complex_from_dict(d) -> GeometricComplex:
    _check(isinstance(d, dict), "top level must be a JSON object")
    missing = _KEYS - set(d)
    _check(not missing, f"missing fields: {', '.join(sorted(missing))}")
    _check(d["version"] == FORMAT_VERSION, f"unsupported version {d['version']!r}")
    m, N = d["dimension_m"], d["ambient_N"]
    _check(isinstance(m, int) and isinstance(N, int) and 0 <= m <= N and N >= 1,
           f"bad dimensions m={m!r}, N={N!r}")
    try:
        V = np.array(d["vertices"], dtype=float)
        S = np.array(d["simplices"])
    except (TypeError, ValueError) as e:
        raise ComplexFileError(f"vertices or simplices are not rectangular arrays: {e}") from None
    if V.size == 0:
        V = V.reshape(0, N)
    if S.size == 0:
        S = S.reshape(0, m + 1).astype(np.int64)
    _check(V.ndim == 2 and V.shape[1] == N, f"vertices must have shape (n, {N})")
    _check(np.isfinite(V).all(), "vertex coordinates must be finite")
    _check(S.ndim == 2 and S.shape[1] == m + 1, f"simplices must have shape (k, {m + 1})")
    _check(S.dtype.kind in "iu", "simplex entries must be integers")
    _check(S.size == 0 or (S.min() >= 0 and S.max() < len(V)), "simplex index out of range")
    _check(S.shape[1] < 2 or bool((np.diff(S, axis=1) > 0).all()),
           "simplex rows must be sorted strictly ascending")
    return GeometricComplex(V, S)


def loads_complex(text: str) -> GeometricComplex:
    try:
        d = json.loads(text, parse_constant=_reject_constant)
    except json.JSONDecodeError as e:
        raise ComplexFileError(f"not valid JSON: {e}") from None
    return complex_from_dict(d)


def _reject_constant(name):
    raise ComplexFileError(f"non-finite value {name} in file")


def write_complex(A: GeometricComplex, path) -> None:
    _write_text(path, dumps_complex(A))


def read_complex(path) -> GeometricComplex:
    with open(path, encoding="utf-8") as fh:
        return loads_complex(fh.read())


def _write_text(path, text: str) -> None:
    """Write via a temporary sibling so a failed run never leaves a truncated file."""
    path = os.fspath(path)
    tmp = f"{path}.tmp{os.getpid()}"
    try:
        with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    finally:
        if os.path.exists(tmp):
            os.remove(tmp)


def write_report(report, path) -> None:
    _write_text(path, report.to_json() + "\n")


def write_report_csv(report, path) -> None:
    _write_text(path, report.to_csv())
