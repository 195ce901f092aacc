"""Exception hierarchy. The CLI maps each family to its own exit code."""


class DpgenError(Exception):
    exit_code = 1
    kind = "Error"

    def __init__(self, message, **context):
        super().__init__(message)
        self.context = context

    def one_line(self):
        parts = [f"kind={type(self).__name__}"]
        parts.extend(f"{k}={v}" for k, v in self.context.items())
        parts.append(f"message={str(self)!r}")
        return "error: " + " ".join(parts)


class ConfigError(DpgenError):
    exit_code = 2


class DataError(DpgenError):
    """Input data is inconsistent with itself or with a contract."""

    exit_code = 5


class LineCountMismatch(DataError):
    pass


class MalformedLink(DataError):
    pass


class IndexOutOfRange(DataError):
    pass


class SentenceCountMismatch(DataError):
    pass


class EmptyCorpus(DataError):
    pass


class SingleClassCorpus(DataError):
    pass


class NoAnchors(DataError):
    pass


class ModelError(DpgenError):
    exit_code = 4


class ShapeMismatch(ModelError):
    pass


class NonFiniteGradient(ModelError):
    pass


class ModelFormatError(ModelError):
    pass


class FileAccessError(DpgenError):
    """Wraps an OSError raised while reading or writing an artifact."""

    exit_code = 3
