"""
Run registry for qworkstat.

Uses Peewee ORM with support for SQLite, PostgreSQL, and MySQL via SQLAlchemy-style URLs.
Every recorded scenario run keeps its headline numbers and peak table; the CSV
and report files stay in the run's output directory.
"""
import argparse
import json
import os
import uuid
from datetime import datetime
from pathlib import Path
from typing import Dict, Any, Optional, List
from urllib.parse import urlparse

from peewee import *

from .CustomEncoder import CustomEncoder
from .config import get_config
from .version import __version__


# Global database instance
database_proxy = DatabaseProxy()


class BaseModel(Model):
    """Base model with common functionality."""

    class Meta:
        database = database_proxy


class ScenarioRun(BaseModel):
    """One executed scenario."""

    run_id = CharField(primary_key=True, max_length=8)
    created = DateTimeField(default=datetime.now)

    scenario = CharField(max_length=255)
    mode = CharField(max_length=20)
    seed = IntegerField(null=True)
    shots = IntegerField(default=0)

    total_mass = FloatField(null=True)
    root_mk = FloatField(null=True)
    out_dir = CharField(max_length=1024, null=True)

    report_json = TextField()
    qworkstat_version = CharField(max_length=50, default=__version__)

    class Meta:
        table_name = 'scenario_runs'
        indexes = (
            (('created',), False),
            (('scenario',), False),
        )


class PeakRecord(BaseModel):
    """Integrated weight of one reconstructed peak."""

    run_id = CharField(max_length=8)
    position = FloatField()
    weight = FloatField()

    class Meta:
        table_name = 'peak_records'
        primary_key = CompositeKey('run_id', 'position')
        indexes = (
            (('run_id',), False),
        )


def create_database_from_url(url: str) -> Database:
    """Create database connection from SQLAlchemy-style URL."""
    parsed = urlparse(url)

    if parsed.scheme == 'sqlite':
        # sqlite:///path/to/db.db or sqlite:///:memory:
        if parsed.path == '/:memory:':
            db_path = ':memory:'
        else:
            db_path = parsed.path[1:]
            Path(db_path).parent.mkdir(parents=True, exist_ok=True)
        return SqliteDatabase(db_path)

    elif parsed.scheme == 'postgresql':
        return PostgresqlDatabase(
            parsed.path[1:],
            user=parsed.username,
            password=parsed.password,
            host=parsed.hostname or 'localhost',
            port=parsed.port or 5432
        )

    elif parsed.scheme == 'mysql':
        return MySQLDatabase(
            parsed.path[1:],
            user=parsed.username,
            password=parsed.password,
            host=parsed.hostname or 'localhost',
            port=parsed.port or 3306
        )

    else:
        raise ValueError(f"Unsupported database URL scheme: {parsed.scheme}")


def initialize_database(url: Optional[str] = None) -> Database:
    """Initialize database connection and create tables."""
    if url is None:
        url = get_config().get_database_url()

    db = create_database_from_url(url)
    database_proxy.initialize(db)

    # an in-memory database lives only as long as its connection
    db.connect(reuse_if_open=True)
    db.create_tables([ScenarioRun, PeakRecord], safe=True)

    return db


def get_database() -> Database:
    """Get the current database connection."""
    if database_proxy.obj is None:
        initialize_database()
    return database_proxy.obj


def _run_as_dict(run: ScenarioRun, peaks: bool = False) -> Dict[str, Any]:
    data = {
        'run_id': run.run_id,
        'created': run.created.isoformat() if run.created else None,
        'scenario': run.scenario,
        'mode': run.mode,
        'seed': run.seed,
        'shots': run.shots,
        'total_mass': run.total_mass,
        'root_mk': run.root_mk,
        'out_dir': run.out_dir,
    }
    if peaks:
        data['peaks'] = [{'position': p.position, 'weight': p.weight}
                         for p in PeakRecord.select().where(PeakRecord.run_id == run.run_id)
                         .order_by(PeakRecord.position)]
        data['report'] = json.loads(run.report_json)
    return data


class DatabaseManager:
    """Run registry operations."""

    @classmethod
    def register_cli(cls, parent_subparsers: argparse._SubParsersAction, parent_parser: argparse.ArgumentParser) -> None:
        parser = parent_subparsers.add_parser(
            "runs",
            aliases=["history"],
            parents=[parent_parser],
            help="Recorded scenario runs",
        )
        subparsers = parser.add_subparsers(dest="runs_command", required=True)
        get = subparsers.add_parser("get", aliases=["list", "show"], parents=[parent_parser],
                                    help="List runs, or show one run")
        get.add_argument("run_id", nargs="?", help="Run to show")
        get.add_argument("--limit", type=int, default=20, help="Max runs to list")
        get.add_argument("--scenario", help="Only runs of this scenario")
        delete = subparsers.add_parser("delete", parents=[parent_parser], help="Delete a run")
        delete.add_argument("run_id", help="Run to delete")

    def __init__(self, args: argparse.Namespace = None):
        self.args = args
        self.db = get_database()

    def save_run(self, report) -> ScenarioRun:
        """Record a scenario report and its peak table in one transaction."""
        data = report.to_dict()
        run_id = data.get('run_id') or uuid.uuid4().hex[:8]
        with self.db.atomic():
            run, created = ScenarioRun.get_or_create(
                run_id=run_id,
                defaults={
                    'scenario': data['scenario'],
                    'mode': data['mode'],
                    'seed': data.get('seed'),
                    'shots': data.get('shots', 0),
                    'total_mass': data.get('total_mass'),
                    'root_mk': (data.get('jarzynski') or {}).get('root_mK'),
                    'out_dir': data.get('out_dir'),
                    'report_json': json.dumps(data, cls=CustomEncoder),
                }
            )
            if not created:
                run.report_json = json.dumps(data, cls=CustomEncoder)
                run.total_mass = data.get('total_mass')
                run.save()
                PeakRecord.delete().where(PeakRecord.run_id == run_id).execute()
            for peak in data.get('peaks', []):
                PeakRecord.create(run_id=run_id, position=peak['position'], weight=peak['weight'])
            return run

    def get_run(self, run_id: str) -> Optional[ScenarioRun]:
        try:
            return ScenarioRun.get(ScenarioRun.run_id == run_id)
        except ScenarioRun.DoesNotExist:
            return None

    def list_runs(self, limit: int = 20, scenario: Optional[str] = None) -> List[ScenarioRun]:
        """Runs ordered by creation time, newest first."""
        query = ScenarioRun.select()
        if scenario:
            query = query.where(ScenarioRun.scenario == scenario)
        return list(query.order_by(ScenarioRun.created.desc()).limit(limit))

    def delete_run(self, run_id: str) -> bool:
        """Delete a run and its peak records."""
        with self.db.atomic():
            try:
                run = ScenarioRun.get(ScenarioRun.run_id == run_id)
            except ScenarioRun.DoesNotExist:
                return False
            PeakRecord.delete().where(PeakRecord.run_id == run_id).execute()
            run.delete_instance()
            return True

    def get_database_stats(self) -> Dict[str, Any]:
        db_size = 0
        if isinstance(self.db, SqliteDatabase) and self.db.database != ':memory:':
            try:
                db_size = os.path.getsize(self.db.database)
            except (OSError, AttributeError):
                pass

        return {
            'run_count': ScenarioRun.select().count(),
            'peak_records': PeakRecord.select().count(),
            'database_size_bytes': db_size,
        }

    def execute(self):
        cmd = self.args.runs_command

        if cmd in ("get", "list", "show"):
            if self.args.run_id:
                run = self.get_run(self.args.run_id)
                if run is None:
                    raise ValueError(f"Run '{self.args.run_id}' not found")
                data = _run_as_dict(run, peaks=True)
                object_type = "run"
            else:
                data = [_run_as_dict(r) for r in self.list_runs(self.args.limit, self.args.scenario)]
                object_type = "run_list"
            return {"success": True, "object_type": object_type, "data": data,
                    "timestamp": datetime.now().isoformat()}

        if cmd == "delete":
            if not self.delete_run(self.args.run_id):
                raise ValueError(f"Run '{self.args.run_id}' not found")
            return {"success": True, "object_type": "run_deleted", "data": {"run_id": self.args.run_id},
                    "timestamp": datetime.now().isoformat()}

        raise ValueError(f"Unknown runs command: {cmd}")

