import argparse

from config import get_config
from logging_setup import setup_logger


def create_app() -> argparse.ArgumentParser:
    """Initialize logging + configuration and build the CLI parser."""
    config = get_config()
    setup_logger(config)

    parser = argparse.ArgumentParser(
        prog="pnpmm",
        description="Poisson and Poisson-Gaussian image reconstruction with PnP-MM, MLEM and OSEM.",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)

    # Register subcommands
    from src.routes.commands import register_commands

    register_commands(subparsers)
    return parser
