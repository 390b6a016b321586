"""Exception hierarchy.

Everything raised for bad input derives from :class:`InfoFlowError`; the
CLI maps these to the "data error" exit status.
"""


class InfoFlowError(ValueError):
    pass


class NonPositivePriceError(InfoFlowError):
    def __init__(self, date, close):
        super().__init__(f"nonpositive close {close!r} on {date}")
        self.date = date
        self.close = close


class LengthError(InfoFlowError):
    pass


class ParameterError(InfoFlowError):
    pass


class DegenerateInputError(InfoFlowError):
    pass


class AlignmentError(InfoFlowError):
    pass


class InsufficientDataError(InfoFlowError):
    pass


class NormalizationError(InfoFlowError):
    pass


class IngestError(InfoFlowError):
    pass
