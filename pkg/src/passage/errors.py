"""Exception hierarchy shared by every passage module."""


class PassageError(Exception):
    """Base class for all library errors."""


class ConfigError(PassageError, ValueError):
    """Bad dimensions, inconsistent flags, missing inputs."""


class SheetOverflow(PassageError):
    """A supermex row scan found no unmarked cell inside the sheet width."""

    def __init__(self, row, level=None):
        self.row = row
        self.level = level
        where = f"row {row}" if level is None else f"level {level}, row {row}"
        super().__init__(f"sheet width exhausted at {where}")


class DiagAddError(PassageError):
    """Row 0 of a loser sheet does not hold exactly one P-cell."""

    EMPTY_ROW0 = 1
    MULTIPLE_ROW0 = 2

    def __init__(self, code, count):
        self.code = code
        self.count = count
        super().__init__(f"diag_add needs exactly one set cell in row 0, found {count}")


class DominatedLevel(PassageError):
    """Chomp ``[x, 0, 0]`` (x >= 1) came out P, so every higher-level position is N."""

    def __init__(self, level):
        self.level = level
        super().__init__(f"[{level},0,0] is a P-position; all higher levels are N")


class FormatError(PassageError):
    """Malformed SHT1 file."""


class IntegrityError(PassageError):
    """A run file does not match its manifest checksum."""
