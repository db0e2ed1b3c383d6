"""Exception hierarchy shared by every module."""


class TitsDynError(Exception):
    """Base class; `exit_code` is what the CLI returns when this escapes."""

    exit_code = 2


# field / linalg
class DivisionByZero(TitsDynError):
    pass


class PrecisionExhausted(TitsDynError):
    pass


class DimensionMismatch(TitsDynError):
    exit_code = 4


class Singular(TitsDynError):
    pass


# dynamics
class NotContracting(TitsDynError):
    pass


class NotProximal(TitsDynError):
    def __init__(self, message: str, direction: str | None = None):
        super().__init__(message)
        self.direction = direction


class NoConvergence(TitsDynError):
    pass


class RegimeViolation(TitsDynError):
    pass


class VerificationFailed(TitsDynError):
    def __init__(self, message: str, witness=None):
        super().__init__(message)
        self.witness = witness


# pingpong
class NotVeryProximal(TitsDynError):
    def __init__(self, index: int, direction: str | None, reason: str):
        super().__init__(f"element {index} is not very proximal ({direction}): {reason}")
        self.index = index
        self.direction = direction


class GapViolation(TitsDynError):
    def __init__(self, i: int, j: int, signs: tuple[int, int], measured: float, required: float,
                 reason: str = "cross gap"):
        super().__init__(
            f"{reason} between element {i} (sign {signs[0]:+d}) and element {j} "
            f"(sign {signs[1]:+d}): measured {measured:.6g}, required {required:.6g}")
        self.i, self.j, self.signs = i, j, signs
        self.measured, self.required = measured, required


class SearchFailed(TitsDynError):
    exit_code = 3


class NoWitness(TitsDynError):
    exit_code = 3


class BudgetExceeded(TitsDynError):
    exit_code = 3


# affine
class ParabolicElement(TitsDynError):
    pass


class NotContractive(TitsDynError):
    def __init__(self, index: int, message: str = ""):
        super().__init__(message or f"element {index} has |a| >= 1")
        self.index = index


class FixedPointCollision(TitsDynError):
    def __init__(self, i: int, j: int):
        super().__init__(f"elements {i} and {j} share a fixed point")
        self.i, self.j = i, j


class DiscOverlap(TitsDynError):
    def __init__(self, i: int, j: int, gap, needed):
        super().__init__(f"image discs {i} and {j} overlap: centre gap {gap}, needed > {needed}")
        self.i, self.j, self.gap, self.needed = i, j, gap, needed


# growth
class StateExplosion(TitsDynError):
    exit_code = 3


class InsufficientData(TitsDynError):
    pass


class CoverGap(TitsDynError):
    def __init__(self, witness, count: int):
        super().__init__(f"net point {witness} covered by only {count} translated half-balls")
        self.witness, self.count = witness, count


class MissingFreenessPrerequisite(TitsDynError):
    pass


# polya
class RootIsolationFailure(TitsDynError):
    exit_code = 3


class BoundViolated(TitsDynError):
    pass


class NonIntegrableSingularity(TitsDynError):
    exit_code = 3


# places
class PrecisionEscalationNeeded(TitsDynError):
    exit_code = 3


# cli
class InputError(TitsDynError):
    exit_code = 4


class PreconditionViolated(TitsDynError):
    pass
