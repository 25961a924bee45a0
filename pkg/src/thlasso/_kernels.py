"""Selects the compiled coordinate-descent kernel, falling back to pure Python.

Set ``THLX_PURE_PYTHON=1`` to force the fallback.
"""
import os

from . import _cd_py

BACKEND = "python"
cd_sweeps = _cd_py.cd_sweeps

if os.environ.get("THLX_PURE_PYTHON", "") != "1":
    try:
        from ._cd import cd_sweeps  # noqa: F811
        BACKEND = "cython"
    except ImportError:  # extension not built
        pass
