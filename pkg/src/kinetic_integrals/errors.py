"""Exception types raised across the package."""


class KineticIntegralsError(Exception):
    """Base class for all package errors."""


class DegreeOverflow(KineticIntegralsError):
    pass


class InverseMismatch(KineticIntegralsError):
    pass


class DenominatorNotDeclared(KineticIntegralsError):
    pass


class EmptyAnsatz(KineticIntegralsError):
    pass


class LambdaZero(KineticIntegralsError):
    pass


class NotApplicable(KineticIntegralsError):
    pass


class SingularityHit(KineticIntegralsError):
    pass


class MissingPotential(KineticIntegralsError):
    pass


class ExpectationMismatch(KineticIntegralsError):
    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


class ParseError(KineticIntegralsError):
    """Text that does not follow the polynomial/FI syntax.

    ``line`` and ``column`` are 1-based positions inside the offending text;
    ``field`` names the spec entry it came from, when known.
    """

    def __init__(self, message, line=1, column=1, field=None):
        self.message = message
        self.line = line
        self.column = column
        self.field = field
        where = f"{field}: " if field else ""
        super().__init__(f"{where}line {line}, column {column}: {message}")


class VerificationFailed(KineticIntegralsError):
    """A candidate integral failed exact or numerical certification."""
