"""Exception hierarchy shared by all modules."""


class MeshwalkError(Exception):
    """Base class for every error raised by meshwalk."""


# mesh codec
class MeshError(MeshwalkError, ValueError):
    pass


class NonManifoldMesh(MeshError):
    pass


class MeshFormatError(MeshError):
    def __init__(self, message, line=None, path=None):
        where = ""
        if path is not None:
            where += f"{path}:"
        if line is not None:
            where += f"{line}:"
        super().__init__(f"{where} {message}" if where else message)
        self.line = line
        self.path = path


class NonExistentEdge(MeshError):
    pass


class TopologyViolation(MeshError):
    pass


class InvalidSplit(MeshError):
    pass


class MeshTooSmall(MeshError):
    pass


class MalformedRecord(MeshError):
    pass


class SimplificationStalled(UserWarning):
    """Issued when no legal collapse remains before the base-mesh target."""


# scene / cache
class NotVisible(MeshwalkError, ValueError):
    pass


class DomainError(MeshwalkError, ValueError):
    pass


class RecordTooLarge(MeshwalkError, ValueError):
    pass


class PrefixViolation(MeshwalkError, ValueError):
    pass


class EmptyCache(MeshwalkError, LookupError):
    pass


class NoAccesses(MeshwalkError, ZeroDivisionError):
    pass


# medium
class MaxRetriesExceeded(MeshwalkError):
    pass


# server
class UnknownObject(MeshwalkError, KeyError):
    pass


class UnknownClient(MeshwalkError, KeyError):
    pass


class EmptyRange(MeshwalkError, ValueError):
    pass


# engine / cli
class ConfigError(MeshwalkError, ValueError):
    """Invalid run configuration; ``field`` names the offending setting."""

    def __init__(self, message, field=None):
        super().__init__(f"{field}: {message}" if field else message)
        self.field = field


class InvalidStaticPercent(ConfigError):
    pass
