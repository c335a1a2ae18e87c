"""
Run an experiment config.

    setnet run_experiment --config mnist_setmlp_desk
    setnet run_experiment -c my_grid.yaml -w 4 --out runs/grid
    setnet run_experiment -c mnist_setrbm.yaml -n  # validate only

The config is a YAML file or the name of a bundled config. Relative dataset paths resolve
against SETNET_DATA_DIR, relative output paths against SETNET_OUTPUT_DIR.

Exit codes: 0 success, 2 invalid config, 1 failure while running.
"""

import multiprocessing
import sys
from pathlib import Path
from typing import Optional

from attrs import define
from loguru import logger

from typedparser import TypedParser, VerboseQuietArgs, add_argument
from setnet.consts import ExitCode
from setnet.errors import format_exception_single_line
from setnet.experiments import load_config, run, validate
from setnet.log import SHORTEST_FORMAT, configure_logger, get_logger_level_from_args


@define
class Args(VerboseQuietArgs):
    config: Optional[str] = add_argument(
        shortcut="-c", type=str, default=None, help="Config file or bundled config name"
    )
    seed: Optional[int] = add_argument(type=int, default=None, help="Override the config seed")
    workers: int = add_argument(
        shortcut="-w", type=int, default=0, help="Worker processes for grid members"
    )
    out: Optional[str] = add_argument(
        shortcut="-o", type=str, default=None, help="Output directory, overrides output_dir"
    )
    validate_only: bool = add_argument(
        shortcut="-n", action="store_true", help="Check config and dataset headers, then exit"
    )
    progress: bool = add_argument(shortcut="-p", action="store_true", help="Show progress bars")


# restrict logger by default, only enable verbose logging in main process (not workers)
configure_logger(level="WARNING")


def main():
    parser = TypedParser.create_parser(Args, description=__doc__)
    args: Args = parser.parse_args()
    configure_logger(level=get_logger_level_from_args(args), format=SHORTEST_FORMAT)
    logger.info(f"{args}")
    if args.config is None:
        parser.error("--config is required, see setnet list_configs for the bundled ones")

    try:
        raw = load_config(args.config)
    except Exception as e:
        logger.error(format_exception_single_line(e))
        sys.exit(ExitCode.VALIDATION_FAILURE)
    if args.seed is not None:
        raw["seed"] = args.seed
    if args.out is not None:
        raw["output_dir"] = Path(args.out).absolute().as_posix()

    if args.validate_only:
        report = validate(raw)
        print(report.format())
        sys.exit(ExitCode.SUCCESS if report.ok else ExitCode.VALIDATION_FAILURE)

    if args.workers > 0:
        multiprocessing.set_start_method("spawn")
    sys.exit(run(raw, workers=args.workers, show_progress=args.progress))


if __name__ == "__main__":
    main()
