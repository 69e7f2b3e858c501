"""Search kernel selection: the compiled extension when importable, else pure Python.

Set ``LINFLOW_PURE=1`` to force the fallback.
"""
import os

from . import _search_py
from ._search_py import LE, LE_UNIT, NEG, POS, UNIT_LE

BACKEND = "python"
search = _search_py.search
if not os.environ.get("LINFLOW_PURE"):
    try:
        from ._search import search  # noqa: F811
        BACKEND = "cython"
    except ImportError:
        pass

__all__ = ["search", "BACKEND", "POS", "NEG", "LE", "UNIT_LE", "LE_UNIT"]
