"""Exception hierarchy. Every error raised on purpose derives from ``TarskiError``."""


class TarskiError(Exception):
    pass


class NotPartialOrder(TarskiError):
    pass


class NotALattice(TarskiError):
    pass


class TooLarge(TarskiError):
    pass


class NotDistributive(TarskiError):
    pass


class ShapeMismatch(TarskiError):
    pass


class NotJoinPreserving(TarskiError):
    def __init__(self, msg, witness=None):
        super().__init__(msg)
        self.witness = witness


class NotMeetPreserving(TarskiError):
    def __init__(self, msg, witness=None):
        super().__init__(msg)
        self.witness = witness


class NotMonotone(TarskiError):
    def __init__(self, msg, witness=None):
        super().__init__(msg)
        self.witness = witness


class InvalidConnection(TarskiError):
    def __init__(self, node, edge, witness):
        super().__init__(f"restriction at node {node}, edge {edge} is not a Galois connection; witness {witness}")
        self.node = node
        self.edge = edge
        self.witness = witness


class NotAPath(TarskiError):
    pass


class NotConverged(TarskiError):
    """Raised when an iteration exhausts its step budget. Carries what was computed so far."""

    def __init__(self, msg, state=None, trace=None):
        super().__init__(msg)
        self.state = state
        self.trace = trace if trace is not None else []


class MetricUndefined(TarskiError):
    pass


class UnknownAtom(TarskiError):
    pass


class BadAgent(TarskiError):
    pass


class SpecError(TarskiError):
    """Malformed sheaf-spec or formula text. ``line``/``col`` are 1-based when known."""

    def __init__(self, msg, line=None, col=None):
        where = f" (line {line}, column {col})" if line is not None else ""
        super().__init__(msg + where)
        self.line = line
        self.col = col
