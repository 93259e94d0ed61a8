"""Exception hierarchy shared by every stage of the tool."""


class DriftlensError(Exception):
    pass


class LocatedError(DriftlensError):
    def __init__(self, message, line=None, col=None):
        self.message = message
        self.line = line
        self.col = col
        where = ""
        if line is not None:
            where = f"line {line}" + (f", column {col}" if col is not None else "") + ": "
        super().__init__(where + message)


class LexError(LocatedError):
    pass


class ParseError(LocatedError):
    pass


class SemanticError(LocatedError):
    pass


class AlreadyInstrumented(DriftlensError):
    pass


class NotHoistable(DriftlensError):
    pass


class RuntimeFault(LocatedError):
    def __init__(self, message, line=None, subprogram=None):
        self.subprogram = subprogram
        if subprogram:
            message = f"{message} (in {subprogram.upper()})"
        super().__init__(message, line)


class TraceError(DriftlensError):
    pass


class FormatError(TraceError):
    def __init__(self, message, line=None, offset=None):
        self.line = line
        self.offset = offset
        where = []
        if line is not None:
            where.append(f"line {line}")
        if offset is not None:
            where.append(f"byte offset {offset}")
        super().__init__(f"{message} ({', '.join(where)})" if where else message)


class UnsupportedVersion(FormatError):
    pass


class ReferenceExhausted(TraceError):
    pass


class RangeError(TraceError):
    pass


class UnknownSite(TraceError):
    pass


class SiteMismatch(TraceError):
    pass
