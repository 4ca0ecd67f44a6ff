"""Kernel backend selection.

The compiled extension is preferred when available. NNDIALOG_KERNELS
overrides: "py"/"python"/"numpy" forces the fallback, "c"/"cython"/
"compiled" requires the extension and raises if it is missing.
"""

import os

from nndialog.errors import ConfigError

_FORCE_PY = {"py", "python", "numpy"}
_FORCE_C = {"c", "cython", "compiled"}


def _load():
    choice = os.environ.get("NNDIALOG_KERNELS", "").strip().lower()
    if choice and choice not in _FORCE_PY | _FORCE_C:
        raise ConfigError(f"unknown NNDIALOG_KERNELS value: {choice!r}")
    if choice in _FORCE_PY:
        from nndialog.kernels import numpy_backend
        return numpy_backend
    try:
        from nndialog.kernels import _ckernels
        return _ckernels
    except ImportError:
        if choice in _FORCE_C:
            raise ConfigError(
                "NNDIALOG_KERNELS requested the compiled backend but the "
                "extension is not built; reinstall with a C compiler available"
            )
        from nndialog.kernels import numpy_backend
        return numpy_backend


backend = _load()
COMPILED = backend.COMPILED

sigmoid = backend.sigmoid
sigmoid_grad = backend.sigmoid_grad
tanh = backend.tanh
tanh_grad = backend.tanh_grad
softmax_rows = backend.softmax_rows
softmax_xent_forward = backend.softmax_xent_forward
softmax_xent_backward = backend.softmax_xent_backward
lstm_gates_forward = backend.lstm_gates_forward
lstm_gates_backward = backend.lstm_gates_backward
scatter_add_rows = backend.scatter_add_rows
adam_step = backend.adam_step
