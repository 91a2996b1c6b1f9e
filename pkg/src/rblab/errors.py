"""Exception hierarchy shared by all modules."""
from __future__ import annotations


class RblabError(Exception):
    """Base class for library errors."""


class PrecisionExhausted(RblabError):
    """Too few correct digits remain after a mod-1 reduction."""


class RootOfUnity(RblabError):
    """A small divisor vanished exactly: the multiplier is a root of unity."""


class RejectionOverflow(RblabError):
    """Rejection sampling could not find points in a numerically empty region."""


class CalibrationFailed(RblabError):
    """No radius on the doubling schedule produced an invariant local basin."""


class DegenerateTrace(RblabError):
    """An orbit tail contains u = 0."""


class OrbitDegenerate(RblabError):
    """The resonant product vanished before the requested iteration depth."""


class IllConditioned(RblabError):
    """A regression design is numerically singular."""


class DomainError(RblabError, ValueError):
    """An argument lies outside the domain of a formula."""


class NotInBasin(RblabError):
    """The point was not shown to enter the local basin within the horizon."""


class ConfigInvalid(RblabError, ValueError):
    """A configuration file or option is malformed."""
