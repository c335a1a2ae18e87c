"""Exceptions raised by setnet and the single-line formatter used by the command line."""

from __future__ import annotations

import traceback
from typing import Sequence


class SetnetError(Exception):
    pass


class ShapeMismatchError(SetnetError, ValueError):
    pass


class TopologyError(SetnetError, ValueError):
    pass


class UndefinedFitError(SetnetError, ValueError):
    pass


class DataFormatError(SetnetError, ValueError):
    pass


class ModelTooLargeError(SetnetError, ValueError):
    pass


class ConfigValidationError(SetnetError, ValueError):
    def __init__(self, findings: Sequence[str]):
        self.findings = list(findings)
        super().__init__(f"{len(self.findings)} problem(s): {'; '.join(self.findings)}")


def format_exception(e: BaseException, with_traceback: bool = False) -> str:
    error_str, error_name = str(e), type(e).__name__
    out_str = error_name if error_str == "" else f"{error_name}: {error_str}"
    if not with_traceback:
        return out_str
    tb_str = "".join(traceback.format_tb(e.__traceback__))
    return f"{tb_str}{out_str}"


def format_exception_single_line(e: BaseException) -> str:
    return " ".join(format_exception(e).split())
