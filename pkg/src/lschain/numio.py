"""Lossless JSON encoding of complex arrays and scalars."""
from __future__ import annotations

import numpy as np


def encode_matrix(m: np.ndarray) -> dict:
    """Real and imaginary parts as flat lists; Python's float repr round-trips exactly."""
    m = np.asarray(m, dtype=complex)
    return {
        "shape": list(m.shape),
        "re": [float(x) for x in m.real.ravel()],
        "im": [float(x) for x in m.imag.ravel()],
    }


def decode_matrix(data: dict) -> np.ndarray:
    re = np.asarray(data["re"], dtype=float)
    im = np.asarray(data["im"], dtype=float)
    return (re + 1j * im).reshape(data["shape"])


def encode_complex(z: complex) -> list:
    z = complex(z)
    return [z.real, z.imag]


def decode_complex(pair) -> complex:
    return complex(pair[0], pair[1])


def fmt(x: float) -> str:
    """17 significant digits, enough for an exact double round-trip."""
    return format(float(x), ".17g")
