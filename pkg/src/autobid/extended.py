"""Extended reals for utilities and realized ROIs.

A utility of ``-inf`` encodes a violated budget or ROI constraint and a
realized ROI of ``+inf`` encodes a zero payment. Neither is a number, so
arithmetic on them is refused instead of silently producing ``nan``.
"""
from __future__ import annotations

import enum
import functools
import math
from numbers import Real


class SentinelArithmeticError(ArithmeticError):
    """Raised when arithmetic is attempted on an infinite sentinel."""


class _Kind(enum.IntEnum):
    NEG_INF = 0
    FINITE = 1
    POS_INF = 2


@functools.total_ordering
class ExtReal:
    """A finite real, ``+inf`` or ``-inf``."""

    __slots__ = ("_kind", "_value")

    def __init__(self, value: float | ExtReal):
        if isinstance(value, ExtReal):
            self._kind, self._value = value._kind, value._value
            return
        value = float(value)
        if math.isnan(value):
            raise ValueError("ExtReal cannot hold nan")
        if value == math.inf:
            self._kind, self._value = _Kind.POS_INF, 0.0
        elif value == -math.inf:
            self._kind, self._value = _Kind.NEG_INF, 0.0
        else:
            self._kind, self._value = _Kind.FINITE, value

    @property
    def is_finite(self) -> bool:
        return self._kind is _Kind.FINITE

    @property
    def is_pos_inf(self) -> bool:
        return self._kind is _Kind.POS_INF

    @property
    def is_neg_inf(self) -> bool:
        return self._kind is _Kind.NEG_INF

    @property
    def value(self) -> float:
        """The finite value; raises for sentinels."""
        if not self.is_finite:
            raise SentinelArithmeticError(f"{self!r} has no finite value")
        return self._value

    def __float__(self) -> float:
        if self._kind is _Kind.POS_INF:
            return math.inf
        if self._kind is _Kind.NEG_INF:
            return -math.inf
        return self._value

    def _key(self) -> tuple[int, float]:
        return (int(self._kind), self._value)

    @staticmethod
    def _coerce(other) -> ExtReal | None:
        if isinstance(other, ExtReal):
            return other
        if isinstance(other, Real):
            try:
                return ExtReal(other)
            except ValueError:
                return None
        return None

    def __eq__(self, other) -> bool:
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return self._key() == other._key()

    def __lt__(self, other) -> bool:
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return self._key() < other._key()

    def __hash__(self) -> int:
        return hash(self._key())

    def _arith(self, other, op):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        if not (self.is_finite and other.is_finite):
            raise SentinelArithmeticError(f"arithmetic on {self!r} and {other!r}")
        return ExtReal(op(self._value, other._value))

    def __add__(self, other):
        return self._arith(other, lambda a, b: a + b)

    def __radd__(self, other):
        return self._arith(other, lambda a, b: b + a)

    def __sub__(self, other):
        return self._arith(other, lambda a, b: a - b)

    def __rsub__(self, other):
        return self._arith(other, lambda a, b: b - a)

    def __mul__(self, other):
        return self._arith(other, lambda a, b: a * b)

    def __rmul__(self, other):
        return self._arith(other, lambda a, b: b * a)

    def __truediv__(self, other):
        return self._arith(other, lambda a, b: a / b)

    def __neg__(self) -> ExtReal:
        return ExtReal(-float(self))

    def __repr__(self) -> str:
        if self._kind is _Kind.POS_INF:
            return "ExtReal(+inf)"
        if self._kind is _Kind.NEG_INF:
            return "ExtReal(-inf)"
        return f"ExtReal({self._value!r})"

    def to_json(self) -> float | str:
        """JSON-safe form: a number, or the strings ``"+inf"`` / ``"-inf"``."""
        if self._kind is _Kind.POS_INF:
            return "+inf"
        if self._kind is _Kind.NEG_INF:
            return "-inf"
        return self._value


POS_INF = ExtReal(math.inf)
NEG_INF = ExtReal(-math.inf)
