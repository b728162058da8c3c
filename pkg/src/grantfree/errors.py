"""Exception types shared across the package.

Configuration problems derive from :class:`ConfigError` (CLI exit code 2);
numerical failures at run time derive from :class:`NumericError` (exit code 3).
"""
from __future__ import annotations


class GrantFreeError(Exception):
    """Base class for all package errors."""


class ConfigError(GrantFreeError, ValueError):
    """Invalid configuration or inconsistent inputs."""

    def __init__(self, message: str, field: str | None = None):
        self.field = field
        super().__init__(f"{field}: {message}" if field else message)


class DimensionError(ConfigError):
    """Array shapes disagree; ``field`` names the offending dimension."""


class PowerControlRequired(ConfigError):
    """OTD thresholds need every user received at the same power."""

    def __init__(self, message: str = "otd-requires-power-control"):
        super().__init__(message, field="powers")


class LogLogDomainError(ConfigError):
    """Code length below 16, where ln ln L drops under one."""

    def __init__(self, code_len: int):
        self.code_len = code_len
        super().__init__(f"loglog-domain: need L >= 16, got {code_len}", field="code_len")


class NumericError(GrantFreeError, ArithmeticError):
    """A numerical routine could not produce a result."""


class UnderdeterminedSupport(NumericError):
    def __init__(self, support, code_len: int):
        self.support = tuple(int(i) for i in support)
        super().__init__(
            f"underdetermined: support of size {len(self.support)} exceeds L={code_len}"
        )


class SingularSupport(NumericError):
    def __init__(self, support):
        self.support = tuple(int(i) for i in support)
        super().__init__(f"singular-support: columns {list(self.support)} are rank deficient")


class CapExceeded(NumericError):
    def __init__(self, cap: int):
        self.cap = cap
        super().__init__(f"cap-exceeded: no solution with L <= {cap}")
