"""Exception types shared across the toolkit."""


class SkillTraceError(Exception):
    """Base class for data errors (CLI exit code 2)."""


class EmptyCorpusError(SkillTraceError):
    pass


class ParseError(SkillTraceError):
    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}"
            if line is not None:
                where += f":{line}"
            where += ": "
        super().__init__(where + message)


class ModelFormatError(SkillTraceError):
    pass


class VersionMismatchError(ModelFormatError):
    pass


class TrainingError(SkillTraceError):
    pass


class ContractViolation(ValueError):
    """Raised when a caller breaks an operation's precondition."""
