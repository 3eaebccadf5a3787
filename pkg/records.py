"""Line-oriented record files (`<TAG> field field ...`, `#` comments)."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from errors import DataFormatError

RECORD_TAGS = ("N", "E", "P", "O", "V", "B")


@dataclass(frozen=True)
class Record:
    tag: str
    fields: tuple
    line_no: int
    path: str = ""

    def error(self, message):
        return DataFormatError(f"{self.tag} record: {message}", path=self.path, line_no=self.line_no)

    def int_field(self, index, name):
        try:
            raw = self.fields[index]
        except IndexError:
            raise self.error(f"missing {name}") from None
        try:
            return int(raw)
        except ValueError:
            raise self.error(f"{name} is not an integer: {raw!r}") from None

    def float_field(self, index, name, default=None):
        if index >= len(self.fields):
            if default is not None:
                return default
            raise self.error(f"missing {name}")
        raw = self.fields[index]
        try:
            value = float(raw)
        except ValueError:
            raise self.error(f"{name} is not a number: {raw!r}") from None
        if not math.isfinite(value):
            raise self.error(f"{name} is not finite: {raw!r}")
        return value


def strip_comment(line):
    return line.split("#", 1)[0].strip()


def iter_records(lines, *, path="", tags=RECORD_TAGS, start_line=1):
    """Yield a Record for every non-blank, non-comment line.

    A line whose first token is not one of ``tags`` is a DataFormatError.
    """
    for line_no, raw in enumerate(lines, start=start_line):
        text = strip_comment(raw)
        if not text:
            continue
        parts = text.split()
        tag = parts[0]
        if tag not in tags:
            raise DataFormatError(
                f"unexpected record tag {tag!r} (expected one of {', '.join(tags)})",
                path=path,
                line_no=line_no,
            )
        yield Record(tag=tag, fields=tuple(parts[1:]), line_no=line_no, path=path)


def read_records(path, tags=RECORD_TAGS):
    with open(path, "r", encoding="utf-8") as f:
        return list(iter_records(f, path=str(path), tags=tags))


def fmt_float(value):
    """Shortest positional text that parses back to the same float."""
    return np.format_float_positional(float(value), trim="-")
