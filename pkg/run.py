import sys


def main():
    # Allow running without installing the package
    sys.path.insert(0, "src")
    from sqglab.cli import main as cli_main

    raise SystemExit(cli_main())


if __name__ == "__main__":
    main()
