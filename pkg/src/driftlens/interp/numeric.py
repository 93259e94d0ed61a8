"""Storage formats and the wider register format.

Storage reals are Python floats holding values exactly representable in
the variable's kind (binary32 for REAL, binary64 for REAL(8)). The
extended format is a 64-bit-significand software float, standing in for
an x87-style register.
"""
from __future__ import annotations

import math
import struct

import mpmath
from mpmath.libmp import mpf_pos, to_float

EXT = mpmath.MPContext()
EXT.prec = 64
ExtFloat = type(EXT.mpf(0))

SPACE_I4 = struct.unpack("<i", b"    ")[0]  # 538976288
SPACE_R4 = struct.unpack("<f", b"    ")[0]
SPACE_R8 = struct.unpack("<d", b" " * 8)[0]


def to_f32(x: float) -> float:
    try:
        return struct.unpack("f", struct.pack("f", x))[0]
    except OverflowError:
        return math.copysign(math.inf, x)


def wrap_i32(n: int) -> int:
    n &= 0xFFFFFFFF
    return n - 0x100000000 if n & 0x80000000 else n


def is_ext(x) -> bool:
    return isinstance(x, ExtFloat)


def ext(x):
    """Exact conversion of an int or float into the wide format."""
    if isinstance(x, ExtFloat):
        return x
    return EXT.mpf(x)


def round_real(kind: int, x) -> float:
    """Round a float or wide value to storage of REAL kind 4 or 8."""
    if isinstance(x, ExtFloat):
        if kind == 8:
            return to_float(x._mpf_, rnd="n")
        return to_f32(to_float(mpf_pos(x._mpf_, 24, "n"), rnd="n"))
    x = float(x)
    return to_f32(x) if kind == 4 else x
