"""Shared exception types.

Every failure mode carries a stable machine-readable ``code`` string so that
callers (and the CLI report writer) can branch on it without parsing prose.
"""

from __future__ import annotations


class IwasawaError(Exception):
    """Base class for all library errors."""

    code = "ERROR"

    def __init__(self, message: str = ""):
        super().__init__(message or self.code)


class BudgetMismatch(IwasawaError):
    code = "BUDGET_MISMATCH"


class NotAUnit(IwasawaError):
    code = "NOT_A_UNIT"


class OutOfDomain(IwasawaError):
    code = "OUT_OF_DOMAIN"


class PrecisionExhausted(IwasawaError):
    code = "PRECISION_EXHAUSTED"


class NotSInvertible(IwasawaError):
    code = "NOT_S_INVERTIBLE"


class ExponentViolation(IwasawaError):
    code = "EXPONENT_VIOLATION"


class NotASubgroup(IwasawaError):
    code = "NOT_A_SUBGROUP"


class NotNormal(IwasawaError):
    code = "NOT_NORMAL"


class NotIndexP(IwasawaError):
    code = "NOT_INDEX_P"


class NotAbelian(IwasawaError):
    code = "NOT_ABELIAN"


class AbelianInput(IwasawaError):
    code = "ABELIAN_INPUT"


class NotInPhi(IwasawaError):
    code = "NOT_IN_PHI"


class NotInPhiB(IwasawaError):
    code = "NOT_IN_PHI_B"


class NotInPhiRW(IwasawaError):
    code = "NOT_IN_PHI_RW"


class Inconsistent(IwasawaError):
    code = "INCONSISTENT"


class ExcludedTotalGroup(IwasawaError):
    code = "EXCLUDED_TOTAL_GROUP"


class IntegralityFailure(IwasawaError):
    code = "INTEGRALITY_FAILURE"


class NotInImage(IwasawaError):
    code = "NOT_IN_IMAGE"


class SingularMatrix(IwasawaError):
    code = "SINGULAR_MATRIX"


class BadCharacter(IwasawaError):
    code = "BAD_CHARACTER"


class NotIntegral(IwasawaError):
    code = "NOT_INTEGRAL"


class NotInPsi(IwasawaError):
    code = "NOT_IN_PSI"


class OracleGap(IwasawaError):
    code = "ORACLE_GAP"


class HypothesisFails(IwasawaError):
    code = "HYPOTHESIS_FAILS"


class ProviderGap(IwasawaError):
    code = "PROVIDER_GAP"


class Case2ChainFailure(IwasawaError):
    code = "CASE2_CHAIN_FAILURE"


class Unsupported(IwasawaError):
    code = "UNSUPPORTED"
