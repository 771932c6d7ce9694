"""Shared exception types."""


class CapExceeded(Exception):
    """A requested computation exceeds a hard resource cap (dense dimension, sample state size)."""


class NumericalAmbiguityError(RuntimeError):
    """A rank or multiplicity count has singular values too close to the tolerance to resolve."""
