"""Exception types raised by helmpso."""


class HelmPsoError(Exception):
    """Base class for all package errors."""


class InvalidArgument(HelmPsoError, ValueError):
    pass


class NotFound(HelmPsoError, KeyError):
    def __str__(self):
        return str(self.args[0]) if self.args else ""


class EigenvalueProximityError(HelmPsoError, ArithmeticError):
    """The reduced FEM matrix is (numerically) singular.

    Happens when the reaction coefficient sits on, or very close to, an
    eigenvalue of the mixed Dirichlet/Neumann Laplacian.
    """


class IllConditionedBasis(HelmPsoError, ArithmeticError):
    pass


class OracleUnavailable(HelmPsoError, ArithmeticError):
    pass


class ConfigError(HelmPsoError, ValueError):
    pass
