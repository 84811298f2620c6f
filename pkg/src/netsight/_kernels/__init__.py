"""Hot kernels, compiled when available.

The Cython build is preferred; set ``NETSIGHT_PURE_PYTHON=1`` to force the
pure-Python fallback. ``BACKEND`` names the implementation in use.
"""

import os

from . import _pykernels
from ._pykernels import (
    BAD_IP_HEADER,
    BAD_TCP_OFFSET,
    NOT_IPV4,
    NOT_IPV4_ETHERTYPE,
    OK,
    TOO_SHORT,
    TRUNCATED_TRANSPORT,
    UNSUPPORTED_PROTOCOL,
)

try:
    if os.environ.get("NETSIGHT_PURE_PYTHON"):
        raise ImportError("pure Python requested")
    from . import _ckernels as _impl
    BACKEND = "cython"
except ImportError:
    _impl = _pykernels
    BACKEND = "python"

decode_headers = _impl.decode_headers
periodicity_score = _impl.periodicity_score


def available_backends() -> dict:
    """Map of backend name to kernel module, for parity tests and benchmarks."""
    backends = {"python": _pykernels}
    try:
        from . import _ckernels
    except ImportError:
        pass
    else:
        backends["cython"] = _ckernels
    return backends


__all__ = [
    "BACKEND",
    "available_backends",
    "decode_headers",
    "periodicity_score",
    "OK",
    "TOO_SHORT",
    "NOT_IPV4_ETHERTYPE",
    "NOT_IPV4",
    "BAD_IP_HEADER",
    "UNSUPPORTED_PROTOCOL",
    "TRUNCATED_TRANSPORT",
    "BAD_TCP_OFFSET",
]
