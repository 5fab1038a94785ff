"""Exception hierarchy shared by the engines and the CLI.

Every engine error names the offending element (cone, ray, cell, stratum or
file) so that the CLI can print a one-line diagnostic. ``exit_code`` follows
the CLI contract: 2 for bad input, 1 for a failed verification.
"""

from __future__ import annotations

from typing import Any, Optional


class LefschetzError(Exception):
    """Base class for all domain errors."""

    exit_code = 2

    def __init__(self, message: str, element: Optional[Any] = None):
        super().__init__(message)
        self.message = message
        self.element = element

    @property
    def name(self) -> str:
        return type(self).__name__

    def diagnostic(self) -> str:
        suffix = f" [element={self.element}]" if self.element is not None else ""
        return f"{self.name}: {self.message}{suffix}"

    def to_dict(self):
        return {
            "error": self.name,
            "message": self.message,
            "element": None if self.element is None else str(self.element),
            "exit_code": self.exit_code,
        }


class VerificationFailure(LefschetzError):
    """An identity that must hold exactly did not."""

    exit_code = 1


# Input / schema

class ProblemFormatError(LefschetzError):
    pass


# spectral

class BoundaryAmbiguous(LefschetzError):
    pass


class UnitCircleRequired(LefschetzError):
    pass


class InvalidSubbundle(LefschetzError):
    pass


class DegenerateNormalMap(LefschetzError):
    pass


# fan

class NotSimplicial(LefschetzError):
    pass


class NotFaceClosed(LefschetzError):
    pass


class Overlapping(LefschetzError):
    pass


class NotComplete(LefschetzError):
    pass


class NotConeCompatible(LefschetzError):
    pass


class SingularMap(LefschetzError):
    pass


class FanNotAdapted(LefschetzError):
    pass


# conic

class StalkShapeError(LefschetzError):
    pass


class FunctorialityViolation(LefschetzError):
    pass


class EquivarianceViolation(LefschetzError):
    pass


class LocalizationMismatch(VerificationFailure):
    """Expanding and shrinking localization disagree."""

    def __init__(self, expanding: Any, shrinking: Any, element: Optional[Any] = None):
        super().__init__(
            f"expanding trace {expanding} differs from shrinking trace {shrinking}",
            element,
        )
        self.expanding = expanding
        self.shrinking = shrinking


# euler

class InvalidComplex(LefschetzError):
    pass


class NotCompact(LefschetzError):
    pass


class NonIdentityMap(LefschetzError):
    pass


class MissingFixedCellData(LefschetzError):
    pass


# charcycle

class NonGenericCovector(LefschetzError):
    pass


class NonGenericSection(LefschetzError):
    pass


class AmbientDimTooLarge(LefschetzError):
    pass


class ChamberVariation(VerificationFailure):
    pass
