class InstrumentalError(Exception):
    """Base error for the instrumental toolkit.

    Every error carries a machine-readable ``code`` so the management commands
    can report it as ``[code] message``.
    """

    code = 'instrumental-error'

    def __init__(self, message, code=None):
        super().__init__(message)
        if code is not None:
            self.code = code


class DimensionMismatchError(InstrumentalError):
    code = 'dimension-mismatch'


class MalformedDocumentError(InstrumentalError):
    code = 'malformed-document'


class InvalidDistributionError(InstrumentalError):
    code = 'invalid-distribution'

    def __init__(self, message, violations=None):
        super().__init__(message)
        self.violations = list(violations or [])


class OutOfRangeError(InstrumentalError):
    code = 'out-of-range'
