"""Exception hierarchy shared by the front end, grounder and solver."""


class AggrPropError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(AggrPropError):
    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        where = f"{line}:{column}: " if line is not None else ""
        super().__init__(f"{where}{message}")


class SafetyError(ParseError):
    def __init__(self, variable, line=None, column=None):
        self.variable = variable
        super().__init__(f"unsafe variable {variable}", line, column)


class ArityError(ParseError):
    pass


class UnsupportedError(AggrPropError):
    """A construct outside the supported fragment."""


class GroundingBudgetExceeded(AggrPropError):
    def __init__(self, cap, needed=None, what="ground rules"):
        self.cap = cap
        self.needed = needed
        self.what = what
        extra = f" (needs {needed})" if needed is not None else ""
        super().__init__(f"grounding budget exceeded: more than {cap} {what}{extra}")


class TimeBudgetExceeded(AggrPropError):
    pass


class NonTightProgramError(AggrPropError):
    pass


class AtomCapExceeded(AggrPropError):
    pass
