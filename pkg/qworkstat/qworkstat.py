import argparse
import logging
import sys
from datetime import datetime, timezone

from rich.console import Console
from rich.logging import RichHandler
from rich_argparse import RichHelpFormatter

from .api import handle_json_command
from .output_formatter import OutputFormatter
from .terminal_output import terminal_output
from .version import __version__

console = Console()

FORMAT = "%(message)s"

logging.basicConfig(level=logging.WARNING, format=FORMAT, datefmt="[%X]",
                    handlers=[RichHandler(console=Console(stderr=True), rich_tracebacks=True)])
log = logging.getLogger(__file__)
__all__ = ["main"]


def get_cmd_args(argv=None) -> tuple[argparse.ArgumentParser, argparse.Namespace]:
    """
    Parse command-line arguments.

    Example usages:
        qworkstat list-scenarios
        qworkstat run --config fig2a-closed-ideal
        qworkstat run --config my.toml --mode shots --shots 4000 --seed 7
        qworkstat export-circuits --config fig2a-closed-ideal --out qasm/
        qworkstat jarzynski --config fig3-jarzynski-sweep
        qworkstat runs get
    """
    # Shared flags (can appear after subcommand)
    parent = argparse.ArgumentParser(add_help=False)
    parent.add_argument("-d", "--dump", action="store_true", help="Output cmd args")
    parent.add_argument("-v", "--verbose", action="store_true", help="Stage and timing lines on stderr")
    format_group = parent.add_mutually_exclusive_group()
    format_group.add_argument("--json", action="store_true", help="Output as JSON (machine-readable)")
    format_group.add_argument("--pretty", action="store_true", help="Output as pretty tables (human-readable)")

    parser = argparse.ArgumentParser(
        prog="qworkstat",
        description="Quantum work statistics by interferometric emulation",
        formatter_class=RichHelpFormatter,
        epilog=(
            "[bold yellow]Quick Start:[/]\n"
            "  qworkstat list-scenarios\n"
            "  qworkstat run --config fig2a-closed-ideal\n"
            "  qworkstat jarzynski --config fig3-jarzynski-sweep\n"
        ),
    )
    parser.add_argument("--version", action="version", version=f"qworkstat {__version__}")

    subparsers = parser.add_subparsers(dest="command", required=True)

    from .Scenario import ScenarioManager, CircuitManager, JarzynskiManager
    from .database import DatabaseManager

    ScenarioManager.register_cli(subparsers, parent)
    CircuitManager.register_cli(subparsers, parent)
    JarzynskiManager.register_cli(subparsers, parent)
    DatabaseManager.register_cli(subparsers, parent)

    args = parser.parse_args(argv)
    return parser, args


def _exit_code(response) -> int:
    if isinstance(response, dict) and response.get("success") is False:
        return int(response.get("exit_code", 1))
    return 0


def main(argv=None):
    parser, args = get_cmd_args(argv)

    # Priority: explicit flags > auto-detect from TTY
    stdout_is_tty = sys.stdout.isatty()
    if args.json:
        output_format = "json"
        setattr(args, "pretty", False)
    elif args.pretty:
        output_format = "table"
    else:
        output_format = "table" if stdout_is_tty else "json"
        setattr(args, "pretty", stdout_is_tty)

    terminal_output.reset()
    terminal_output.configure("capture" if output_format == "json" else "stdout")

    if args.dump:
        console.print(f"[bold cyan]qworkstat[/] [dim]v{__version__}[/]")
        console.print(args)
        return

    try:
        response = handle_json_command(args)
    except Exception as e:
        response = {"success": False, "error": str(e), "code": "INTERNAL", "exit_code": 1}

    success = response.get("success", True)
    exit_code = _exit_code(response)

    if output_format == "json":
        envelope = {
            "success": success,
            "data": response.get("data") if success else None,
            "error": None if success else {
                "code": response.get("code", "INTERNAL"),
                "message": response.get("error"),
                "source": response.get("source"),
            },
            "stdout": terminal_output.get_stdout() or None,
            "meta": {
                "schema_version": 1,
                "command": f"{args.command}",
                "args": vars(args),
                "timestamp": datetime.now(timezone.utc).replace(tzinfo=None).isoformat() + "Z",
                "version": __version__,
            },
        }
        sys.stdout.write(OutputFormatter.format(envelope, format_type="json") + "\n")
        sys.stdout.flush()

    if not success:
        err_console = Console(file=sys.stderr)
        err_console.print(f"[red]Error:[/] {response.get('error', 'Unknown error')}")
        sys.exit(exit_code)

    if output_format != "json":
        console.print(OutputFormatter.format(response, format_type="pretty"))


if __name__ == "__main__":
    main()
