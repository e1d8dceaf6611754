from scorelab.cli.commands import cli


def main() -> None:
    cli(prog_name="scorelab")


if __name__ == "__main__":
    main()
