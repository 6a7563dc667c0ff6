"""Kernel backend selection.

The compiled ``_kernels`` extension is used when it imports; otherwise the
numpy implementations in ``_kernels_py`` are used. Setting the environment
variable ``AMPLITUDE_PR_PURE_PYTHON=1`` forces the numpy path.

The compiled loops beat numpy's BLAS calls only on small matrices, so calls
with more than ``COMPILED_MAX_ENTRIES`` matrix entries go to numpy even when
the extension is loaded (see benchmarks/bench_kernels.py for the crossover).
"""
import os

import numpy as np

from . import _kernels_py

try:
    from . import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None

if _compiled is not None and not os.environ.get("AMPLITUDE_PR_PURE_PYTHON"):
    _impl = _compiled
    BACKEND = "cython"
else:
    _impl = _kernels_py
    BACKEND = "python"

COMPILED_MAX_ENTRIES = 4096


def compiled_module():
    """The compiled kernel module, or None when the extension is unavailable."""
    return _compiled


def python_module():
    return _kernels_py


def _c(a, dtype):
    return np.ascontiguousarray(a, dtype=dtype)


def _pick(M):
    return _impl if M.size <= COMPILED_MAX_ENTRIES else _kernels_py


def amplitude_loss(B, b, x):
    return _pick(B).amplitude_loss(_c(B, np.complex128), _c(b, np.float64), _c(x, np.complex128))


def amplitude_gradient(B, b, x, threshold=0.0):
    return _pick(B).amplitude_gradient(
        _c(B, np.complex128), _c(b, np.float64), _c(x, np.complex128), float(threshold)
    )


def lifted_forward(BS, u1, u2, lam1, lam2):
    return _pick(BS).lifted_forward(
        _c(BS, np.complex128), _c(u1, np.complex128), _c(u2, np.complex128),
        float(lam1), float(lam2),
    )
