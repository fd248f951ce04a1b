"""Kernel backend selection.

The compiled backend is used when the extension imports cleanly; setting
``CTHOCS_PURE_PYTHON=1`` forces the numpy fallback.  Both expose the same
functions, and :func:`get_backend` returns either module by name for tests
and benchmarks.
"""
import logging
import os

from . import _kernels_py

log = logging.getLogger(__name__)

try:
    from . import _ckernels
except ImportError:  # extension not built
    _ckernels = None

_BACKENDS = {"python": _kernels_py}
if _ckernels is not None:
    _BACKENDS["cython"] = _ckernels

if os.environ.get("CTHOCS_PURE_PYTHON") == "1" or _ckernels is None:
    BACKEND = "python"
else:
    BACKEND = "cython"

_active = _BACKENDS[BACKEND]
log.debug("kernel backend: %s", BACKEND)


def available_backends():
    return list(_BACKENDS)


def get_backend(name=None):
    if name is None:
        return _active
    try:
        return _BACKENDS[name]
    except KeyError:
        raise ValueError(f"kernel backend {name!r} not available") from None


rc_pulse = _active.rc_pulse
pulse_train = _active.pulse_train
project = _active.project
lag_product = _active.lag_product
cfar_noise = _active.cfar_noise
