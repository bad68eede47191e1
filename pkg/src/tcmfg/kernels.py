"""Backend selection and threaded dispatch for the stencil kernels.

The compiled extension is preferred; TCMFG_FORCE_FALLBACK=1 forces the numpy
path. TCMFG_THREADS caps the number of workers used to sweep disjoint row
chunks; each cell's accumulation order is fixed independently of the chunking,
so results are bit-identical at any worker count.
"""

import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

if os.environ.get("TCMFG_FORCE_FALLBACK") == "1":
    from . import _kernels_np as _impl
    BACKEND = "numpy"
else:
    try:
        from . import _kernels as _impl
        BACKEND = "compiled"
    except ImportError:
        from . import _kernels_np as _impl
        BACKEND = "numpy"


def thread_count() -> int:
    raw = os.environ.get("TCMFG_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        raise ValueError(f"TCMFG_THREADS must be an integer, got {raw!r}")
    if n < 1:
        raise ValueError(f"TCMFG_THREADS must be >= 1, got {n}")
    return n


def _chunks(n: int, parts: int):
    parts = min(parts, n)
    step = (n + parts - 1) // parts
    return [(lo, min(lo + step, n)) for lo in range(0, n, step)]


def stencil_apply(values: np.ndarray, offsets: np.ndarray, weights: np.ndarray,
                  diag: float, out: np.ndarray | None = None) -> np.ndarray:
    """out[x] = diag*values[x] + sum_j weights[j]*values[x + offset_j], periodic.

    offsets must be pre-normalized to [0, N) per axis: shape (m,) in 1D,
    (m, 2) in 2D.
    """
    if out is None:
        out = np.empty_like(values)
    nt = thread_count()
    if values.ndim == 1:
        args = (values, offsets, weights, float(diag), out)
        rows = values.shape[0]
        runner = _impl.stencil_apply_1d
    elif values.ndim == 2:
        o0 = np.ascontiguousarray(offsets[:, 0])
        o1 = np.ascontiguousarray(offsets[:, 1])
        args = (values, o0, o1, weights, float(diag), out)
        rows = values.shape[0]
        runner = _impl.stencil_apply_2d
    else:
        raise ValueError("only 1D and 2D grids are supported")

    if nt == 1 or BACKEND == "numpy":
        runner(*args, 0, rows)
    else:
        with ThreadPoolExecutor(max_workers=nt) as pool:
            futs = [pool.submit(runner, *args, lo, hi) for lo, hi in _chunks(rows, nt)]
            for f in futs:
                f.result()
    return out
