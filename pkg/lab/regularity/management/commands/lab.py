"""
``python manage.py lab <subcommand>``: the command-line surface of the lab.

Exit codes: 0 every verdict PASS, 1 configuration or I/O error,
2 some verdict INDETERMINATE and none FAIL, 3 some verdict FAIL.
"""

import logging
import os
from pathlib import Path

from django.conf import settings
from django.core.management.base import BaseCommand, CommandError

from regularity.config import load_config
from regularity.exceptions import LabError
from regularity.fields import list_scenarios
from regularity.harness import FAIL, INDETERMINATE, PASS, overall_status, run_experiments
from regularity.reports import emit_plots, write_report

EXIT_CODES = {PASS: 0, INDETERMINATE: 2, FAIL: 3}


def output_directory(option, config, several=False) -> Path:
    """--out, then $HOLDERLAB_OUT, then the config's output_dir, then REPORTS_ROOT/<stem>."""
    stem = Path(config.source).stem if config.source else config.kind
    env = os.environ.get(settings.HOLDERLAB["OUTPUT_ENV_VAR"])
    base = option or env
    if several:
        return Path(base or settings.HOLDERLAB["REPORTS_ROOT"]) / stem
    if base:
        return Path(base)
    if config.output_dir:
        return Path(config.output_dir)
    return Path(settings.HOLDERLAB["REPORTS_ROOT"]) / stem


class Command(BaseCommand):
    help = "Run regularity experiments, list scenarios, validate configs and emit plot data."

    def add_arguments(self, parser):
        subparsers = parser.add_subparsers(dest="subcommand", required=True)

        run = subparsers.add_parser("run", help="run one or more experiment configs")
        run.add_argument("--config", action="append", required=True, help="experiment YAML (repeatable)")
        run.add_argument("--out", help="report directory")
        run.add_argument("--set", action="append", default=[], dest="overrides", metavar="KEY=VALUE")
        run.add_argument("--jobs", type=int, help="worker threads (default: config, then CPU count)")
        run.add_argument("--quiet", action="store_true", help="log warnings only")

        subparsers.add_parser("list-scenarios", help="print the field catalog with default parameters")

        check = subparsers.add_parser("validate-config", help="parse and validate a config only")
        check.add_argument("--config", required=True)
        check.add_argument("--set", action="append", default=[], dest="overrides", metavar="KEY=VALUE")

        plots = subparsers.add_parser("emit-plots", help="regenerate the plot bundle of a persisted report")
        plots.add_argument("--out", required=True, help="report directory holding report.json")
        plots.add_argument("--quiet", action="store_true")

    def _configure_logging(self, options):
        logger = logging.getLogger("regularity")
        if options.get("quiet"):
            logger.setLevel(logging.WARNING)
        elif options["verbosity"] > 1:
            logger.setLevel(logging.DEBUG)
        else:
            logger.setLevel(logging.INFO)

    def handle(self, *args, **options):
        self._configure_logging(options)
        handler = {
            "run": self.run,
            "list-scenarios": self.list_scenarios,
            "validate-config": self.validate_config,
            "emit-plots": self.emit_plots,
        }[options["subcommand"]]
        try:
            return handler(options)
        except LabError as exc:
            raise CommandError(f"{exc.category}: {exc}", returncode=1)
        except OSError as exc:
            raise CommandError(f"io: {exc}", returncode=1)

    def run(self, options):
        if options["jobs"] is not None and options["jobs"] < 1:
            raise CommandError("config: --jobs must be >= 1", returncode=1)
        configs = [load_config(path, options["overrides"]) for path in options["config"]]
        several = len(configs) > 1
        targets = [output_directory(options["out"], c, several) for c in configs]
        reports = run_experiments(configs, options["jobs"])
        verdicts = {}
        for config, report, target in zip(configs, reports, targets):
            write_report(report, target)
            self.stdout.write(f"{report.status} {config.kind} {target}")
            for name, v in report.verdicts.items():
                verdicts[f"{target.name}:{name}"] = v
                self.stdout.write(f"  {v['status']:<13} {name}: {v['detail']}")
        status = overall_status(verdicts)
        if status != PASS:
            raise CommandError(f"verdict: {status}", returncode=EXIT_CODES[status])

    def list_scenarios(self, options):
        for group, entries in list_scenarios().items():
            for name, params in sorted(entries.items()):
                defaults = " ".join(f"{key}={value:g}" for key, value in sorted(params.items()))
                self.stdout.write(f"{group:<9} {name:<16} {defaults}".rstrip())

    def validate_config(self, options):
        config = load_config(options["config"], options["overrides"])
        self.stdout.write(f"OK {config.kind} {options['config']}")

    def emit_plots(self, options):
        written = emit_plots(options["out"])
        self.stdout.write(f"wrote {len(written)} plot files to {options['out']}")
