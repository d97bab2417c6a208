"""Error taxonomy shared by the harness, service, and CLI.

Exit codes: 0 success, 2 configuration error, 3 numerical failure,
4 privacy-audit failure.
"""

from __future__ import annotations


class CttError(Exception):
    exit_code = 1


class ConfigError(CttError):
    exit_code = 2


class NumericalError(CttError):
    exit_code = 3


class PrivacyAuditError(CttError):
    exit_code = 4

    def __init__(self, message: str, report: object | None = None):
        super().__init__(message)
        self.report = report
