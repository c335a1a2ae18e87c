from .csvext import append_csv_rows, format_to_csv, read_csv_dicts, write_csv_rows
from .file_reader import (
    open_maybe_gzip,
    read_text_from_file_or_io,
    yield_lines_from_file,
)
from .numpyext import load_npz_dict, save_npz_dict
from .yamlext import dump_yaml, dumps_yaml, load_yaml, loads_yaml

__all__ = [
    "append_csv_rows",
    "format_to_csv",
    "read_csv_dicts",
    "write_csv_rows",
    "open_maybe_gzip",
    "read_text_from_file_or_io",
    "yield_lines_from_file",
    "load_npz_dict",
    "save_npz_dict",
    "dump_yaml",
    "dumps_yaml",
    "load_yaml",
    "loads_yaml",
]
