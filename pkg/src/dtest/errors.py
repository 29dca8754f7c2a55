"""Exception types shared across the package.

Every failure mode that callers are expected to handle gets its own class so
that the CLI can map them onto diagnostics and exit codes without string
matching.  All of them derive from DTestError.
"""


class DTestError(Exception):
    """Base class for all errors raised by this package."""


class EmptyModel(DTestError):
    """A model (or derived proxy) turned out to contain no material."""


class NonClosedMesh(DTestError):
    """Ray parity votes disagree after retries: the mesh is not watertight."""


class GridTooLarge(DTestError):
    """The requested voxel grid exceeds the cell budget."""


class EmptyCloud(DTestError):
    """No surface crossing was found while sampling the boundary."""


class EmptyInterval(DTestError):
    """The admissible ball-radius interval is empty (lower >= upper)."""


class MalformedXml(DTestError):
    """A template file is not well-formed XML."""


class MissingField(DTestError):
    """A required template field is absent."""

    def __init__(self, name: str):
        self.name = name
        super().__init__(f"missing required template field: {name}")


class InvalidValue(DTestError):
    """A template field is present but its value is out of range."""

    def __init__(self, name: str, detail: str = ""):
        self.name = name
        msg = f"invalid value for template field: {name}"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)


class KindMismatch(DTestError):
    """Two property values of different kinds were compared."""


class NoProperties(DTestError):
    """A report was requested for an empty list of comparisons."""


class AllDegenerate(DTestError):
    """Every triangle of a mesh collapsed during a write/read round trip."""


class MalformedPart21(DTestError):
    """A STEP Part 21 file violates the exchange-structure grammar."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class NoTessellatedGeometry(DTestError):
    """A STEP file contains no triangulated geometry to extract."""


class UnsupportedFormat(DTestError):
    """The model file format could not be recognized or is not handled."""
