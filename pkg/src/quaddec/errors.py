"""Typed errors shared across the package."""


class QuaddecError(Exception):
    """Base class for all package errors."""


class NonSymmetricError(QuaddecError):
    """Signature computation requires a symmetric matrix."""


class InvalidWitness(QuaddecError):
    """A flag witness failed exact re-verification."""


class NotDiagonal(QuaddecError):
    """Tuple is not simultaneously diagonal (literal diagonal Hessians)."""


class NotACK(QuaddecError):
    """Input is not a quadratic ACK monomial system."""


class NotPair(QuaddecError):
    """Operation requires a tuple of exactly two forms."""


class UncertifiedTable(QuaddecError):
    """An exponent-level computation touched interval (uncertified) cells."""


class LinearlyDependentTuple(QuaddecError):
    """Restriction estimates require linearly independent forms."""


class BudgetExceeded(QuaddecError):
    """A counting run would exceed the configured memory cap."""


class DegreeError(QuaddecError):
    """A parsed monomial does not have total degree exactly 2."""

    def __init__(self, message, offset):
        super().__init__(f"{message} (at offset {offset})")
        self.offset = offset


class UnknownVariable(QuaddecError):
    """A variable index exceeds the declared ambient dimension."""

    def __init__(self, message, offset):
        super().__init__(f"{message} (at offset {offset})")
        self.offset = offset


class FormSyntaxError(QuaddecError):
    """Input text does not match the form grammar."""

    def __init__(self, message, offset):
        super().__init__(f"{message} (at offset {offset})")
        self.offset = offset
