"""
Command dispatch for qworkstat - routes parsed CLI arguments to a manager and
returns structured JSON-ready data. Managers never raise to the CLI: every
exception comes back as a failure dict carrying its error code and exit code.
"""
import argparse
from datetime import datetime
from typing import Any

from .Scenario import CircuitManager, JarzynskiManager, ScenarioManager
from .errors import exit_code_for


def handle_json_command(args: argparse.Namespace) -> dict[str, Any]:
    """Run one command and return its response dict"""
    try:
        command = args.command

        if command in ('run', 'scenario', 'list-scenarios', 'scenarios'):
            cmd_manager = ScenarioManager(args)
        elif command in ('export-circuits', 'export'):
            cmd_manager = CircuitManager(args)
        elif command in ('jarzynski', 'thermometry'):
            cmd_manager = JarzynskiManager(args)
        elif command in ('runs', 'history'):
            from .database import DatabaseManager
            cmd_manager = DatabaseManager(args)
        else:
            raise Exception(f"Unknown Object '{command}'")

        return cmd_manager.execute()

    except Exception as e:
        src = ''
        lno = 0

        # Innermost frame of the traceback
        tb = e.__traceback__
        while tb:
            src = tb.tb_frame.f_code.co_filename
            lno = tb.tb_lineno
            tb = tb.tb_next

        code, exit_code = exit_code_for(e)
        return {
            'success': False,
            'source': f'{src}:{lno}',
            'error': f'Command failed: {e}',
            'code': code,
            'exit_code': exit_code,
            'timestamp': datetime.now().isoformat(),
        }
