"""Exception types shared across the package."""

from __future__ import annotations


class LsticError(Exception):
    """Base class for all errors raised by this package."""


class RoundingUnsafe(LsticError):
    """A float-to-integer rounding step left too large a residue."""


class NonConstantNorm(LsticError):
    """A norm computation did not reduce to a base-field constant."""


class NonConstantDet(LsticError):
    """An exact determinant did not reduce to a base-field constant."""


class TowerMismatch(LsticError):
    """Operands belong to different number-field towers."""


class ZeroIdeal(LsticError):
    """All supplied ideal generators were zero."""


class QuotientTooLarge(LsticError):
    """A quotient-ring enumeration exceeds the configured cap."""


class NotCoprime(LsticError):
    """Ideals required to be relatively prime are not."""


class FactorizationMismatch(LsticError):
    """A claimed prime-ideal factorization failed a consistency check."""


class EmptyCodebook(LsticError):
    """An operation requires a nonempty codebook."""


class AlphabetViolation(LsticError):
    """A message symbol lies outside its alphabet."""


class BudgetExceeded(LsticError):
    """An exact computation would exceed its configured work budget."""


class CodebookTooLarge(LsticError):
    """A codebook exceeds the exhaustive-ML decoding cap."""


class TargetNotBracketed(LsticError):
    """An error-rate curve does not bracket the requested target."""
