"""Exception and warning types raised across polyframe."""


class PolyframeError(Exception):
    """Base class for validation errors (CLI exit code 1)."""


class DegenerateFrame(PolyframeError):
    """Key atoms are coincident or collinear, so no frame can be built."""


class SizeMismatch(PolyframeError):
    pass


class InvalidUnitSpec(PolyframeError):
    pass


class JunctionViolation(PolyframeError):
    """Atoms on either side of an inter-unit bond are too far apart."""


class NotRotatable(PolyframeError):
    pass


class NotStandardized(PolyframeError):
    pass


class InvalidTimesteps(PolyframeError):
    pass


class InvalidK(PolyframeError):
    pass


class IndexOutOfRange(PolyframeError):
    pass


class EmptyMatrix(PolyframeError):
    pass


class ProjectionFailure(PolyframeError):
    pass


class GraphMismatch(PolyframeError):
    pass


class OracleFailure(PolyframeError):
    pass


class TemplateUnavailable(PolyframeError):
    pass


class ParseError(PolyframeError):
    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}:"
            if line is not None:
                where += f"{line}:"
            where += " "
        super().__init__(f"{where}{message}")


class HashMismatch(PolyframeError):
    pass


class MalformedRecord(ParseError):
    pass


class NearPiAmbiguity(UserWarning):
    """Rotation angle is within tolerance of pi; the log axis sign is a convention."""
