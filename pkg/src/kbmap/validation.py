"""Input validation and coercion helpers shared by the estimator layer."""

from .triples import ClosedKB, ClosedTriple, OpenKB, OpenTriple


def as_open_kb(data, name: str = "memory") -> OpenKB:
    if isinstance(data, OpenKB):
        return data
    triples = tuple(data)
    if not all(isinstance(t, OpenTriple) for t in triples):
        raise TypeError("expected an OpenKB or an iterable of OpenTriple")
    return OpenKB(name, triples)


def as_closed_kb(data, name: str = "memory") -> ClosedKB:
    if isinstance(data, ClosedKB):
        return data
    triples = tuple(data)
    if not all(isinstance(t, ClosedTriple) for t in triples):
        raise TypeError("expected a ClosedKB or an iterable of ClosedTriple")
    return ClosedKB(name, triples)


def check_positive_int(value, name: str) -> int:
    if not isinstance(value, int) or isinstance(value, bool) or value <= 0:
        raise ValueError(f"{name} must be a positive integer, got {value!r}")
    return value


def check_ratio(value, name: str) -> float:
    if not 0.0 < value < 1.0:
        raise ValueError(f"{name} must lie strictly between 0 and 1, got {value!r}")
    return float(value)
