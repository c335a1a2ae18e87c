"""
Utilities to read content of a single file.
"""

import gzip
from contextlib import contextmanager
from pathlib import Path
from typing import IO, Iterable

from setnet.typext import PathOrIO, PathType, PathTypeCls

GZIP_MAGIC = b"\x1f\x8b"


def is_gzip_file(file: PathType) -> bool:
    with Path(file).open("rb") as fh:
        return fh.read(2) == GZIP_MAGIC


@contextmanager
def open_maybe_gzip(file: PathType) -> Iterable[IO[bytes]]:
    """Open a file for binary reading, decompressing transparently if it is gzipped."""
    file = Path(file)
    opener = gzip.open if is_gzip_file(file) else open
    with opener(file, "rb") as fh:
        yield fh


def read_text_from_file_or_io(file_or_io: PathOrIO, encoding: str = "utf-8") -> str:
    if isinstance(file_or_io, PathTypeCls):
        return Path(file_or_io).read_text(encoding=encoding)
    return file_or_io.read()


def yield_lines_from_file(
    file: PathType, strip: bool = True, skip_empty: bool = True, encoding: str = "utf-8"
) -> Iterable[tuple[int, str]]:
    """
    Read lines from a file, optionally strip whitespace and skip empty lines.

    Returns:
        Generator of (1-based line number, line) so that parse errors can point at the line.
    """
    with Path(file).open(encoding=encoding) as fh:
        for line_num, line in enumerate(fh, start=1):
            if strip:
                line = line.strip()
            else:
                line = line.rstrip("\r\n")
            if skip_empty and line.strip() == "":
                continue
            yield line_num, line
