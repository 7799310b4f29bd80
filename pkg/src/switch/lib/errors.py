"""Exceptions shared by the switch, tuning and engine packages"""


class UnstableSystemError(ValueError):
    """Raised when a load or utilization condition (rho < 1) is violated"""


class ConvergenceError(RuntimeError):
    """Raised when an iterative parameter solver does not converge"""


class InfeasibleMatchingError(RuntimeError):
    """Raised when a scheduling policy returns a matching that breaks the crossbar constraint"""
