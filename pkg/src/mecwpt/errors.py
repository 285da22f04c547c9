"""Shared solver exceptions."""


class Infeasible(RuntimeError):
    """No point satisfies the stated constraints."""


class Unbounded(RuntimeError):
    """The objective can be decreased without limit."""


class ChargingDisabled(RuntimeError):
    """No charging window is available (T_c <= 0)."""
