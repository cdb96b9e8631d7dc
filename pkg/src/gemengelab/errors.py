"""Exception hierarchy."""


class GemengeLabError(Exception):
    """Base class for all library errors."""


class DimensionError(GemengeLabError, ValueError):
    """Shapes or factor structures do not match, or exceed the size cap."""


class InvalidStateError(GemengeLabError, ValueError):
    """A vector or operator fails the invariants of a quantum state."""


class OrthonormalityError(GemengeLabError, ValueError):
    """A family of vectors that must be orthonormal is not."""


class NotUnitaryError(GemengeLabError, ValueError):
    pass


class ZeroProjectionError(GemengeLabError, ValueError):
    """(Anti)symmetrization annihilated the vector."""


class InvalidEffectError(GemengeLabError, ValueError):
    """An operator is not between 0 and the identity."""


class SetupError(GemengeLabError, ValueError):
    """A premeasurement or detector setup violates its invariants."""


class EndStateOrthogonalityError(SetupError):
    """End states of the object system are not orthonormal across outcomes."""


class NotProductFormError(GemengeLabError, ValueError):
    """A composite state does not factor as required."""


class EntanglingInteractionError(NotProductFormError):
    """A scattering unitary produced an entangled output."""


class UndefinedCorrelationError(GemengeLabError, ValueError):
    """A normalized correlation involves an observable with vanishing spread."""


class GemengeError(GemengeLabError, ValueError):
    """Invalid weights, branches or partitions of a gemenge."""


class NotLocalError(GemengeLabError, ValueError):
    """An operator required to be D-local is not."""


class ScenarioError(GemengeLabError):
    """A scenario file or configuration cannot be run."""


class ScenarioParseError(ScenarioError):
    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.line = line
        self.column = column
        where = ""
        if line is not None:
            where = f"line {line}" + (f", column {column}" if column is not None else "") + ": "
        super().__init__(where + message)
