"""Exception hierarchy.

Input errors map to CLI exit status 2, analysis errors to exit status 3.
"""


class AttachnetError(Exception):
    """Base class for all library errors."""


class InputError(AttachnetError):
    exit_code = 2


class AnalysisError(AttachnetError):
    exit_code = 3


class UnparseableMessage(InputError):
    pass


class UnparseableDate(InputError):
    pass


class UnknownUser(InputError):
    pass


class EmptyNetwork(AnalysisError):
    pass


class ConvergenceFailure(AnalysisError):
    pass


class DegenerateInput(AnalysisError):
    pass
