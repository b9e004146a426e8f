"""Certify that a simplicial complex with vertices on a manifold triangulates it."""
import os as _os

__version__ = "0.1.0"

# THREADS caps native thread pools; it only takes effect when set before numpy loads
_cap = _os.environ.get("THREADS", "").strip()
if _cap.isdigit() and int(_cap) > 0:
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS", "NUMBA_NUM_THREADS"):
        _os.environ.setdefault(_var, _cap)


def thread_cap() -> int:
    """Worker count allowed by THREADS (default: all CPUs)."""
    cap = _os.environ.get("THREADS", "").strip()
    if not cap:
        return _os.cpu_count() or 1
    if not cap.isdigit() or int(cap) < 1:
        raise ValueError(f"THREADS must be a positive integer, got {cap!r}")
    return int(cap)
