"""Exception hierarchy shared by every wamm module."""


class WammError(ValueError):
    """Base class for validation errors raised by wamm."""


class MalformedRow(WammError):
    def __init__(self, line: int, reason: str = "malformed row"):
        super().__init__(f"line {line}: {reason}")
        self.line = line
        self.reason = reason


class UnknownClass(WammError):
    def __init__(self, value, line: int | None = None):
        where = f" (line {line})" if line is not None else ""
        super().__init__(f"unknown class {value!r}{where}")
        self.value = value
        self.line = line


class ClassTooSmall(WammError):
    def __init__(self, cls):
        super().__init__(f"class {cls} has fewer than 2 records")
        self.cls = cls


class EmptyDataset(WammError):
    pass


class InvalidParams(WammError):
    pass


class UnknownRecordId(WammError):
    def __init__(self, record_id):
        super().__init__(f"unknown record id {record_id}")
        self.record_id = record_id


class EmptyCorpus(WammError):
    pass


class NotFitted(WammError):
    pass


class ShapeMismatch(WammError):
    pass


class SingleClassInput(WammError):
    pass


class SchemaMismatch(WammError):
    pass


class VersionMismatch(WammError):
    pass


class CorruptFile(WammError):
    pass


class LengthMismatch(WammError):
    pass


class UnknownLabel(WammError):
    pass


class EmptyMatrix(WammError):
    pass


class NoAttackSamples(WammError):
    pass


class InsufficientIterations(WammError):
    pass


class InvalidPatternBank(WammError):
    pass
