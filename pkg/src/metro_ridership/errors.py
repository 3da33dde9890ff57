"""Exception hierarchy. Each class maps to a CLI exit code."""


class RidershipError(Exception):
    exit_code = 1


class ConfigError(RidershipError):
    exit_code = 2


class DataError(RidershipError, ValueError):
    """Input file missing, malformed, or failing a table invariant."""

    exit_code = 3

    def __init__(self, message, *, path=None, row=None, field=None):
        self.path = path
        self.row = row
        self.field = field
        where = []
        if path is not None:
            where.append(str(path))
        if row is not None:
            where.append(f"row {row}")
        if field is not None:
            where.append(f"field '{field}'")
        super().__init__(f"{', '.join(where)}: {message}" if where else message)


class NumericalError(RidershipError, ArithmeticError):
    """Rank deficiency, insufficient degrees of freedom, log of zero RSS."""

    exit_code = 4


class RankDeficientError(NumericalError):
    def __init__(self, message, columns=()):
        super().__init__(message)
        self.columns = tuple(columns)
