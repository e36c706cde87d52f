"""Backend selection for the rank-surrogate kernels.

The compiled extension is used when importable; setting the environment
variable ``ROADMAP_PURE_PYTHON=1`` forces the numpy fallback.
"""

import os

from . import _kernels_py

SUPAP = _kernels_py.SUPAP
SMOOTHAP = _kernels_py.SMOOTHAP


def _load():
    if os.environ.get("ROADMAP_PURE_PYTHON", "") not in ("", "0"):
        return _kernels_py, "python"
    try:
        from . import _kernels
    except ImportError:
        return _kernels_py, "python"
    return _kernels, "cython"


backend, BACKEND = _load()

sigmoid = backend.sigmoid
sigmoid_prime = backend.sigmoid_prime
h_minus_array = backend.h_minus_array
h_minus_grad_array = backend.h_minus_grad_array
supap_kernel = backend.supap_kernel
smoothap_kernel = backend.smoothap_kernel
batch_kernel = backend.batch_kernel
