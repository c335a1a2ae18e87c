"""
List the bundled experiment configs with their task and description.
"""

from attrs import define

from typedparser import TypedParser, VerboseQuietArgs, add_argument
from setnet.experiments import list_bundled_configs, load_config, validate
from setnet.log import SHORTEST_FORMAT, configure_logger, get_logger_level_from_args


@define
class Args(VerboseQuietArgs):
    check: bool = add_argument(
        shortcut="-k", action="store_true", help="Also validate each config, without the data"
    )


def main():
    parser = TypedParser.create_parser(Args, description=__doc__)
    args: Args = parser.parse_args()
    configure_logger(level=get_logger_level_from_args(args), format=SHORTEST_FORMAT)
    for name in list_bundled_configs():
        raw = load_config(name)
        line = f"{name:<24s} {str(raw.get('task')):<18s} {raw.get('description', '')}"
        if args.check:
            report = validate(raw, check_data=False)
            line = f"{line}\n    {report.format()}"
        print(line)


if __name__ == "__main__":
    main()
