# Copyright (c) 2026, the dpsd authors
import enum
import math
import typing


class TooFar(enum.Enum):
    """
    Returned instead of a distance when the distance is beyond the cap k.
    Sorts after every number.
    """
    TOO_FAR = 0

    def __str__(self):
        return 'too_far'


TOO_FAR = TooFar.TOO_FAR

Distance = typing.Union[int, float, TooFar]


def distance_sort_key(value: Distance) -> float:
    if value is TOO_FAR:
        return math.inf
    return float(value)


def distance_to_json(value: Distance):
    if value is TOO_FAR:
        return str(TOO_FAR)
    return value


def distance_from_string(s_value: typing.Union[str, int, float]) -> Distance:
    if isinstance(s_value, str) and s_value.strip().lower() == str(TOO_FAR):
        return TOO_FAR
    value = float(s_value)
    if value.is_integer():
        return int(value)
    return value
