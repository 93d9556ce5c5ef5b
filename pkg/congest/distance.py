"""Distance values with an explicit unreachable sentinel."""
from fractions import Fraction
from typing import Union


class _Unreachable:
    """Sentinel larger than every legal distance.

    Arithmetic is unsupported; use :func:`add` which keeps the
    sentinel absorbing.
    """

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "INF"

    def __str__(self) -> str:
        return "inf"

    def __eq__(self, other) -> bool:
        return other is self

    def __hash__(self) -> int:
        return hash("congest.INF")

    def __lt__(self, other) -> bool:
        return False

    def __le__(self, other) -> bool:
        return other is self

    def __gt__(self, other) -> bool:
        return other is not self

    def __ge__(self, other) -> bool:
        return True

    def __reduce__(self):
        return (_Unreachable, ())


INF = _Unreachable()

Distance = Union[int, Fraction, _Unreachable]


def is_finite(value: Distance) -> bool:
    return value is not INF


def add(value: Distance, weight: Union[int, Fraction]) -> Distance:
    """Extend a distance by an edge weight; INF stays INF."""
    if value is INF:
        return INF
    return value + weight


def format_distance(value: Distance) -> str:
    if value is INF:
        return "inf"
    if isinstance(value, Fraction) and value.denominator != 1:
        return f"{value.numerator}/{value.denominator}"
    return str(int(value))
