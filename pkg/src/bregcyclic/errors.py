"""Exception types raised across the package."""


class DimensionError(ValueError):
    """Points of incompatible dimension were combined."""


class DomainError(ValueError):
    """A point lies outside the domain (or its interior) of a function."""


class AssumptionError(ValueError):
    """A precondition of an operation could not be established."""


class OrbitError(RuntimeError):
    """An iterate left the set the cyclic structure says it should be in.

    ``stage`` is the number of map applications performed before the exit
    was detected, ``set_index`` the expected set and ``distance`` the signed
    distance of the offending point to that set.
    """

    def __init__(self, message, stage=None, set_index=None, distance=None):
        super().__init__(message)
        self.stage = stage
        self.set_index = set_index
        self.distance = distance
