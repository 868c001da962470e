"""Backend selection for the hot tree kernels.

The compiled extension is used when it imports cleanly; setting
``DISCO_PURE_PYTHON=1`` forces the pure-Python fallback.  ``BACKEND`` names
the active choice and both modules stay importable for side-by-side checks.
"""

from __future__ import annotations

import os

from . import _forest_py as python_backend

compiled_backend = None
if os.environ.get("DISCO_PURE_PYTHON") != "1":
    try:
        from . import _forest_core as compiled_backend
    except ImportError:  # extension not built
        compiled_backend = None

if compiled_backend is not None:
    build_tree = compiled_backend.build_tree
    predict_tree = compiled_backend.predict_tree
    BACKEND = "cython"
else:
    build_tree = python_backend.build_tree
    predict_tree = python_backend.predict_tree
    BACKEND = "python"

__all__ = ["BACKEND", "build_tree", "predict_tree", "compiled_backend", "python_backend"]
