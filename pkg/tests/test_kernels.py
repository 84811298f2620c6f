from __future__ import annotations

import math
import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from netsight import _kernels
from netsight.trafficgen import wire

BACKENDS = _kernels.available_backends()


def numpy_periodicity(series) -> float:
    x = np.asarray(series, dtype=float)
    best = 0.0
    for k in range(2, len(x) // 2 + 1):
        a, b = x[:-k], x[k:]
        den = math.sqrt(float(a @ a) * float(b @ b))
        if den > 0:
            best = max(best, float(a @ b) / den)
    return min(best, 1.0)


def test_python_backend_always_present():
    assert "python" in BACKENDS
    assert _kernels.BACKEND in BACKENDS


@pytest.mark.skipif("cython" not in BACKENDS, reason="compiled kernels not built")
def test_compiled_backend_is_distinct():
    assert BACKENDS["cython"] is not BACKENDS["python"]


def _frames():
    rnd = random.Random(7)
    out = [
        wire.frame_udp("02:00:00:00:00:01", "02:00:00:00:00:02", "10.0.0.2", "10.0.0.1", 5353, 53, b"q" * 20),
        wire.frame_tcp("02:00:00:00:00:01", "02:00:00:00:00:02", "10.0.0.2", "8.8.8.8", 40000, 443, 1, 0, 0x02),
        wire.frame_tcp("02:00:00:00:00:01", "02:00:00:00:00:02", "10.0.0.2", "8.8.8.8", 40000, 443, 2, 1, 0x18,
                       b"hello"),
        b"\x00" * 13,
        b"\x00" * 12 + b"\x86\xdd" + b"\x00" * 40,
    ]
    for _ in range(200):
        base = bytearray(rnd.choice(out[:3]))
        for _ in range(rnd.randint(0, 4)):
            base[rnd.randrange(len(base))] = rnd.randrange(256)
        out.append(bytes(base[: rnd.randint(0, len(base))]))
    return out


@pytest.mark.parametrize("frame", _frames())
def test_decode_headers_parity(frame):
    results = {name: mod.decode_headers(frame) for name, mod in BACKENDS.items()}
    assert len(set(results.values())) == 1


@settings(max_examples=200, deadline=None)
@given(st.binary(max_size=80))
def test_decode_headers_parity_on_noise(data):
    results = {mod.decode_headers(data) for mod in BACKENDS.values()}
    assert len(results) == 1


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(min_value=0, max_value=1e6, allow_nan=False), max_size=60))
def test_periodicity_matches_numpy(series):
    oracle = numpy_periodicity(series)
    for mod in BACKENDS.values():
        got = mod.periodicity_score(series)
        assert abs(got - oracle) <= 1e-6
        assert 0.0 <= got <= 1.0


def test_periodicity_fixed_points():
    assert _kernels.periodicity_score([]) == 0.0
    assert _kernels.periodicity_score([0.0] * 10) == 0.0
    assert _kernels.periodicity_score([3.0] * 10) == pytest.approx(1.0)
    assert _kernels.periodicity_score([1, 0, 0, 1, 0, 0, 1, 0, 0, 1, 0, 0]) == pytest.approx(1.0)
