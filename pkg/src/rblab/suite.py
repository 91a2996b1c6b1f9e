"""Suite runner: executes check groups and writes deterministic reports."""
from __future__ import annotations

import csv
import io
import json
import logging
import subprocess
from functools import lru_cache
from pathlib import Path

from . import __version__
from .checks import SUITES, CriterionResult, Lab, run_criterion
from .config import RunConfig
from .errors import ConfigInvalid

__all__ = ["SUITE_NAMES", "REPORT_SCHEMA", "CSV_SCHEMA", "run_suite", "version_string",
           "report_json", "report_csv"]

log = logging.getLogger(__name__)

SUITE_NAMES = (*SUITES, "all")
REPORT_SCHEMA = "rblab-report/1"
CSV_SCHEMA = "rblab-csv/1"
CSV_COLUMNS = ("schema", "suite", "criterion", "check", "passed", "key", "value")


@lru_cache(maxsize=1)
def version_string() -> str:
    """Package version plus the git revision of the source tree when available."""
    try:
        rev = subprocess.run(["git", "describe", "--always", "--dirty"], cwd=Path(__file__).parent,
                             capture_output=True, text=True, timeout=5)
    except (OSError, subprocess.SubprocessError):
        return __version__
    tag = rev.stdout.strip()
    return f"{__version__}+g{tag}" if rev.returncode == 0 and tag else __version__


def _header(config: RunConfig, suite: str) -> dict:
    return {
        "schema": REPORT_SCHEMA,
        "suite": suite,
        "version": version_string(),
        "config_hash": config.digest(),
        "seed": config.seed,
    }


def report_json(config: RunConfig, suite: str, results: list[CriterionResult],
                summary: bool = False) -> str:
    doc = _header(config, suite)
    doc["config"] = config.to_dict()
    doc["passed"] = all(r.passed for r in results)
    if summary:
        doc["criteria"] = [
            {"criterion": r.number, "title": r.title, "passed": r.passed,
             "checks": {c.name: c.passed for c in r.checks}}
            for r in results
        ]
    else:
        doc["criteria"] = [r.to_dict() for r in results]
    return json.dumps(doc, sort_keys=True, indent=2, default=_plain) + "\n"


def _plain(obj):
    # numpy scalars and arrays that slipped into measured values
    if hasattr(obj, "tolist"):
        return obj.tolist()
    raise TypeError(f"not serializable: {type(obj).__name__}")


def _flatten(prefix: str, value, out: list[tuple[str, str]]) -> None:
    if isinstance(value, dict):
        for k in sorted(value):
            _flatten(f"{prefix}.{k}" if prefix else str(k), value[k], out)
    elif isinstance(value, (list, tuple)):
        out.append((prefix, json.dumps(value, sort_keys=True, default=_plain)))
    else:
        out.append((prefix, repr(value) if isinstance(value, float) else str(value)))


def report_csv(config: RunConfig, suite: str, results: list[CriterionResult],
               summary: bool = False) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    head = _header(config, suite)
    w.writerow(["#", *(f"{k}={head[k]}" for k in sorted(head))])
    w.writerow(CSV_COLUMNS)
    for r in results:
        for c in r.checks:
            rows: list[tuple[str, str]] = []
            if not summary:
                _flatten("", c.measured, rows)
                rows.append(("limit", c.limit))
            for key, val in rows or [("", "")]:
                w.writerow([CSV_SCHEMA, suite, r.number, c.name, int(c.passed), key, val])
    return buf.getvalue()


def _write(out_dir: Path, name: str, fmt: str, config: RunConfig, suite: str,
           results: list[CriterionResult], summary: bool = False) -> Path:
    path = out_dir / f"{name}.{fmt}"
    writer = report_json if fmt == "json" else report_csv
    text = writer(config, suite, results, summary)
    path.write_text(text)
    return path


def run_suite(config: RunConfig, suite: str, out_dir: str | Path,
              lab: Lab | None = None) -> tuple[int, list[Path], list[CriterionResult]]:
    """Run a named suite; returns (exit status, report paths, results).

    Exit status is 0 iff every check passed.  ``all`` writes one report per
    suite plus a summary report.
    """
    if suite not in SUITE_NAMES:
        raise ConfigInvalid(f"unknown suite {suite!r}; choose from {', '.join(SUITE_NAMES)}")
    fmt = config.format
    if fmt not in ("json", "csv"):
        raise ConfigInvalid("suite reports are written as json or csv")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    lab = lab or Lab(config)
    names = list(SUITES) if suite == "all" else [suite]
    paths: list[Path] = []
    everything: list[CriterionResult] = []
    for name in names:
        results = []
        for number in SUITES[name]:
            log.info("suite %s: criterion %d", name, number)
            results.append(run_criterion(number, lab))
        everything.extend(results)
        paths.append(_write(out, name, fmt, config, name, results))
    if suite == "all":
        paths.append(_write(out, "summary", fmt, config, "all", everything, summary=True))
    status = 0 if all(r.passed for r in everything) else 1
    return status, paths, everything
