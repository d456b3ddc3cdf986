import sys

from src.app_factory import create_app


def main(argv=None) -> int:
    """
    CLI entrypoint: `python main.py solve --problem deblur --solver pnp_mm ...`
    """
    from src.routes.commands import dispatch

    parser = create_app()
    args = parser.parse_args(argv)
    return dispatch(args)


if __name__ == "__main__":
    sys.exit(main())
