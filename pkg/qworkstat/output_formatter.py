"""
Centralized output formatting for the qworkstat CLI.
Handles both JSON serialization and Rich table formatting.
"""
import json
from typing import Any, Dict, Optional

from rich.console import Group
from rich.panel import Panel
from rich.syntax import Syntax
from rich.table import Table

from .CustomEncoder import CustomEncoder


class OutputFormatter:
    """Centralized formatter that converts JSON to Rich tables"""

    @classmethod
    def format(cls, data: Any, format_type: str = "pretty", title: Optional[str] = None) -> Any:
        """
        Format data for output.

        Returns a JSON string if format_type == "json", otherwise a Rich renderable
        chosen by the response's object_type.
        """
        if format_type == "json":
            return json.dumps(data, indent=2, cls=CustomEncoder)
        return cls._format_pretty(data, title)

    @classmethod
    def _format_pretty(cls, data: Any, title: Optional[str] = None) -> Any:
        object_type = data.get("object_type") if isinstance(data, dict) else None

        if object_type == "scenario_report":
            return cls._format_scenario_report(data["data"], title)
        elif object_type == "scenario_list":
            return cls._auto_format(data, title or "Scenario Presets")
        elif object_type == "circuit_export":
            return cls._format_circuit_export(data["data"], title)
        elif object_type == "jarzynski_report":
            return cls._format_jarzynski(data["data"], title)
        elif object_type == "run_list":
            return cls._auto_format(data, title or "Recorded Runs")

        return cls._auto_format(data, title)

    @staticmethod
    def _peak_table(peaks, title: str, baseline=None, scores=None) -> Table:
        table = Table(title=title)
        table.add_column("w (ueV)", style="cyan", justify="right")
        table.add_column("Weight", style="green", justify="right")
        if baseline is not None:
            table.add_column("Closed baseline", style="yellow", justify="right")
        if scores is not None:
            table.add_column("Asymmetry", style="magenta", justify="right")
        for i, peak in enumerate(peaks):
            row = [f"{peak['position']:.3f}", f"{peak['weight']:.4f}"]
            if baseline is not None:
                row.append(f"{baseline[i]['weight']:.4f}")
            if scores is not None:
                row.append(f"{scores[i]:.3f}")
            table.add_row(*row)
        return table

    @classmethod
    def _format_scenario_report(cls, report: Dict, title: Optional[str] = None) -> Any:
        coherence = report["coherence"]
        peaks = cls._peak_table(report["peaks"], title or f"Scenario {report['scenario']}",
                                report.get("baseline_peaks"), coherence["scores"])

        summary = Table(show_header=False, box=None)
        summary.add_column("Field", style="cyan", no_wrap=True)
        summary.add_column("Value", style="green")
        summary.add_row("Mode", f"{report['mode']}" + (f" ({report['shots']} shots, seed {report['seed']})"
                                                       if report["mode"] == "shots" else ""))
        summary.add_row("Total mass", f"{report['total_mass']:.4f} (in peak windows {report['peak_mass']:.4f})")
        summary.add_row("Mean work", f"{report['mean_work']:.4f} ueV (exact {report['exact_mean_work']:.4f})")
        summary.add_row("Coherence", "none detected" if coherence["symmetric"] else "antisymmetric wings present")
        summary.add_row("Damping factor", f"{report['damping_factor']:.4f}")
        if report.get("jarzynski"):
            summary.add_row("J(T) = 1 at", f"{report['jarzynski']['root_mK']:.1f} mK")
        for key, value in report.get("reference", {}).items():
            summary.add_row(f"Reference {key}", str(value))
        summary.add_row("Output", report["out_dir"])
        if report.get("run_id"):
            summary.add_row("Run", report["run_id"])

        return Group(peaks, summary)

    @classmethod
    def _format_circuit_export(cls, data: Dict, title: Optional[str] = None) -> Table:
        table = Table(title=title or f"Circuits for {data['scenario']}")
        table.add_column("Directory", style="cyan")
        table.add_column("Files", style="green", justify="right")
        table.add_column("First", style="yellow")
        table.add_column("Last", style="yellow")
        files = data["files"]
        table.add_row(str(data["directory"]), str(data["count"]), files[0] if files else "", files[-1] if files else "")
        return table

    @classmethod
    def _format_jarzynski(cls, data: Dict, title: Optional[str] = None) -> Table:
        table = Table(title=title or f"Jarzynski thermometry: {data.get('scenario', '')}")
        table.add_column("Field", style="cyan", no_wrap=True)
        table.add_column("Value", style="green")
        table.add_row("Root", f"{data['root_mK']:.2f} mK")
        table.add_row("Bracket", f"[{data['bracket'][0]:.2f}, {data['bracket'][1]:.2f}] mK")
        table.add_row("Bisection steps", str(data["iterations"]))
        table.add_row("Search range", f"{data['search_mk'][0]:g} .. {data['search_mk'][1]:g} mK")
        if data.get("mixing"):
            table.add_row("Mixed preparations", f"T0={data['t0_mk']} mK, T1={data['t1_mk']} mK")
        if data.get("bath_temperature_mk") is not None:
            table.add_row("Simulated bath", f"{data['bath_temperature_mk']} mK")
        for key, value in data.get("reference", {}).items():
            table.add_row(f"Reference {key}", str(value))
        table.add_row("Curve", data["curve_file"])
        return table

    @classmethod
    def _auto_format(cls, data: Any, title: Optional[str] = None) -> Any:
        """
        Generic auto-formatter for standard JSON structures.
        Handles lists of dicts and single dicts automatically.
        """
        if isinstance(data, dict) and "data" in data:
            actual_data = data["data"]
        else:
            actual_data = data

        # List of dicts with same keys: multi-column table
        if isinstance(actual_data, list) and actual_data and isinstance(actual_data[0], dict):
            keys = list(actual_data[0].keys())
            table = Table(title=title or "Results")
            for key in keys:
                table.add_column(key.replace('_', ' ').title())
            for row in actual_data:
                table.add_row(*[str(row.get(k, '')) for k in keys])
            return table

        # Single dict: pretty JSON panel
        if isinstance(actual_data, dict):
            json_str = json.dumps(actual_data, indent=2, cls=CustomEncoder)
            syntax = Syntax(json_str, "json", theme="monokai", line_numbers=False)
            return Panel(syntax, title=title or "Details", border_style="cyan")

        return actual_data
