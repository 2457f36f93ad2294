"""Exception types raised across citerank."""


class CiteRankError(Exception):
    """Base class for all citerank errors."""


class NegativeCount(CiteRankError, ValueError):
    """A citation count below zero. ``position`` is an index or a line number."""

    def __init__(self, position, message=None):
        self.position = position
        super().__init__(message or f"negative citation count at {position}")


class EmptyInput(CiteRankError, ValueError):
    pass


class TooFewPoints(CiteRankError, ValueError):
    def __init__(self, n_points, required):
        self.n_points = n_points
        self.required = required
        super().__init__(f"need at least {required} usable points, got {n_points}")


class SingularDesign(CiteRankError, ValueError):
    pass


class InvalidConfig(CiteRankError, ValueError):
    pass


class MalformedRow(CiteRankError, ValueError):
    def __init__(self, line_no, reason):
        self.line_no = line_no
        self.reason = reason
        super().__init__(f"line {line_no}: {reason}")


class MalformedDocument(CiteRankError, ValueError):
    def __init__(self, reason):
        self.reason = reason
        super().__init__(reason)


class MismatchedSets(CiteRankError, ValueError):
    def __init__(self, ids):
        self.ids = sorted(ids)
        preview = ", ".join(self.ids[:5])
        super().__init__(f"rankings cover different researchers: {preview}")


class AuthorNotFound(CiteRankError, LookupError):
    def __init__(self, author_id):
        self.author_id = author_id
        super().__init__(f"author not found: {author_id}")


class TransportError(CiteRankError):
    def __init__(self, detail):
        self.detail = detail
        super().__init__(detail)


class SchemaMismatch(CiteRankError):
    def __init__(self, detail):
        self.detail = detail
        super().__init__(detail)


class CacheCorrupt(UserWarning):
    """Emitted (not raised) when a cache line cannot be decoded; the line is skipped."""

    def __init__(self, line_no, reason=""):
        self.line_no = line_no
        self.reason = reason
        super().__init__(f"cache line {line_no} skipped: {reason}".rstrip(": "))
