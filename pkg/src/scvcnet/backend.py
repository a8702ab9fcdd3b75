"""Kernel backend selection.

The compiled extension is preferred; ``SCVC_BACKEND=python`` forces the numpy
kernels, ``SCVC_BACKEND=cython`` makes a missing extension an import error.
"""
from __future__ import annotations

import importlib
import logging
import os

from . import _kernels_py

log = logging.getLogger(__name__)


def _load():
    choice = os.environ.get("SCVC_BACKEND", "auto").lower()
    if choice == "python":
        return _kernels_py
    try:
        return importlib.import_module("scvcnet._kernels")
    except ImportError:
        if choice == "cython":
            raise
        log.debug("compiled kernels unavailable, using numpy fallback")
        return _kernels_py


kernels = _load()
BACKEND = kernels.BACKEND_NAME


def available_backends():
    """Map backend name -> kernel module for every importable backend."""
    found = {"python": _kernels_py}
    try:
        found["cython"] = importlib.import_module("scvcnet._kernels")
    except ImportError:
        pass
    return found
