"""
Entry point: setnet <command> <*args> runs setnet.cli.<command>.main().

Commands are the modules in setnet.cli. Unknown commands exit with 2 like any other
command line error.
"""

import importlib
import importlib.util
import pkgutil
import sys

from setnet.consts import ExitCode

PACKAGE = "setnet"


def _list_cli_modules() -> list[str]:
    cli_pkg = importlib.import_module(f"{PACKAGE}.cli")
    return sorted(m.name for m in pkgutil.iter_modules(cli_pkg.__path__))


def _usage() -> str:
    lines = [f"Usage: {PACKAGE} <command> <*args>", "", "Commands:"]
    return "\n".join(lines + [f"    {name}" for name in _list_cli_modules()])


def main():
    if len(sys.argv) <= 1 or sys.argv[1] in ("-h", "--help"):
        print(_usage(), file=sys.stderr)
        sys.exit(ExitCode.VALIDATION_FAILURE if len(sys.argv) <= 1 else ExitCode.SUCCESS)
    command, args = sys.argv[1], sys.argv[2:]
    module_name = f"{PACKAGE}.cli.{command}"
    # find the spec first so sys.argv can be set before the module parses it on import
    spec = importlib.util.find_spec(module_name) if command.isidentifier() else None
    if spec is None:
        print(f"Unknown command {command!r}\n\n{_usage()}", file=sys.stderr)
        sys.exit(ExitCode.VALIDATION_FAILURE)
    sys.argv = [spec.origin] + args
    module = importlib.import_module(module_name)
    module.main()


if __name__ == "__main__":
    main()
