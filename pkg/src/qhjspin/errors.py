"""Exception hierarchy shared by every module of the package."""


class QHJError(Exception):
    """Base class. ``x`` is the coordinate where the failure was detected, if any."""

    module = "qhjspin"

    def __init__(self, message, x=None):
        super().__init__(message)
        self.x = x

    def diagnostic(self):
        where = "" if self.x is None else f" at x={float(self.x):.17g}"
        return f"[{self.module}] {type(self).__name__}{where}: {self}"


class ValidationError(QHJError, ValueError):
    """Invalid construction parameters. ``field`` names the offending field path."""

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field


# model
class OutOfDomainError(QHJError, ValueError):
    module = "model"


class UnsupportedOrderError(QHJError, ValueError):
    module = "model"


# dirac
class IndependenceError(QHJError, ValueError):
    module = "dirac"


class IntegrationError(QHJError, RuntimeError):
    module = "dirac"


# action
class DegeneratePairError(QHJError, ArithmeticError):
    module = "action"


class SingularDerivativeError(QHJError, ArithmeticError):
    module = "action"


# qshje
class BranchDomainError(QHJError, ArithmeticError):
    module = "qshje"


class PoleError(QHJError, ArithmeticError):
    module = "qshje"


class TurningPointError(QHJError, ArithmeticError):
    module = "qshje"


# dynamics
class SuperluminalError(QHJError, ArithmeticError):
    module = "dynamics"


class NodeError(QHJError, ArithmeticError):
    module = "dynamics"


class CannotStartError(QHJError, RuntimeError):
    module = "dynamics"


class ScenarioError(ValidationError):
    module = "cli"
