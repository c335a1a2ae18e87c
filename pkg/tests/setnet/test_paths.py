from pathlib import Path

from setnet.paths import (
    EnvKeys,
    get_data_dir,
    get_output_dir,
    print_all_environment_variables,
    resolve_data_path,
    resolve_output_path,
)


def test_paths_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv(EnvKeys.SETNET_DATA_DIR, str(tmp_path / "data"))
    monkeypatch.setenv(EnvKeys.SETNET_OUTPUT_DIR, str(tmp_path / "out"))
    assert get_data_dir() == tmp_path / "data"
    assert get_output_dir() == tmp_path / "out"
    assert resolve_data_path("mnist/x") == tmp_path / "data" / "mnist" / "x"
    assert resolve_output_path("runs/a") == tmp_path / "out" / "runs" / "a"
    absolute = (tmp_path / "abs").as_posix()
    assert resolve_data_path(absolute) == Path(absolute)
    assert resolve_output_path(absolute) == Path(absolute)


def test_print_paths():
    lines = []
    print_all_environment_variables(print_fn=lines.append)
    assert lines[0] == "Path definitions:"
    assert len(lines) == 1 + len(EnvKeys)
