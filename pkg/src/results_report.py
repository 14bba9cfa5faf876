"""
Results database, mutation coverage and reports.

Coverage is killed / (all mutants that are not invalid), where killed counts both
test-killed and timeout-killed mutants. Project totals are pooled over files.
"""

import json
import logging
from dataclasses import dataclass
from pathlib import Path

import pandas as pd
from jinja2 import Template

from src.utils import format_percent, natural_key, qualified_id, write_atomic

logger = logging.getLogger(__name__)

KILLED_STATUSES = ("killed", "killed-timeout")
# record fields that must agree before a stored outcome is reused for an indexed mutant
IDENTITY_KEYS = ("kind", "operator", "line", "node_ids", "before", "after", "constituents")


@dataclass(frozen=True)
class CoverageSummary:
    killed: int
    total_valid: int

    @property
    def coverage(self):
        """None when there is no valid mutant."""
        if self.total_valid == 0:
            return None
        return self.killed / self.total_valid

    @property
    def percent(self):
        return format_percent(self.coverage)

    @classmethod
    def pooled(cls, summaries):
        summaries = list(summaries)
        return cls(killed=sum(summary.killed for summary in summaries),
                   total_valid=sum(summary.total_valid for summary in summaries))


def _status(outcome):
    if isinstance(outcome, str):
        return outcome
    if isinstance(outcome, dict):
        return outcome["status"]
    return outcome.status


def compute_coverage(outcomes):
    statuses = [_status(outcome) for outcome in outcomes]
    killed = sum(1 for status in statuses if status in KILLED_STATUSES)
    total_valid = sum(1 for status in statuses if status != "invalid")
    return CoverageSummary(killed=killed, total_valid=total_valid)


def _exit_status_json(exit_status):
    return exit_status if isinstance(exit_status, int) else str(exit_status)


class ResultsDatabase:
    """
    Per-file mutant records with their outcomes, persisted as <output>/results.json.

    Build outputs are kept byte for byte in <output>/outputs/<path>/<mutant_id>.txt and
    referenced from the record by output_ref. Every call to record() rewrites the JSON
    document atomically, so an interrupted run loses at most the mutant in flight.
    """

    FILENAME = "results.json"

    def __init__(self, output_dir, project=None):
        self.output_dir = Path(output_dir)
        self.project = dict(project or {})
        self.files = {}

    @property
    def path(self):
        return self.output_dir / self.FILENAME

    @classmethod
    def load(cls, output_dir):
        database = cls(output_dir)
        if not database.path.exists():
            return database
        with open(database.path) as f:
            document = json.load(f)
        database.project = document.get("project", {})
        for file_entry in document.get("files", []):
            database.files[file_entry["path"]] = {str(entry["mutant_id"]): entry for entry in file_entry["mutants"]}
        return database

    def to_document(self):
        files = []
        for path in sorted(self.files, key=natural_key):
            entries = sorted(self.files[path].values(), key=lambda entry: natural_key(entry["mutant_id"]))
            files.append({"path": path, "mutants": entries})
        return {"project": self.project, "files": files}

    def save(self):
        write_atomic(self.path, json.dumps(self.to_document(), indent=2, ensure_ascii=False) + "\n")

    def has(self, path, mutant_id):
        return str(mutant_id) in self.files.get(path, {})

    def output_ref(self, path, mutant_id):
        return Path("outputs", path, f"{mutant_id}.txt").as_posix()

    def record(self, mutant, outcome, save=True):
        output_ref = self.output_ref(mutant.source_path, mutant.mutant_id)
        write_atomic(self.output_dir / output_ref, outcome.output)
        entry = mutant.to_record()
        entry.pop("edits", None)
        entry.update({
            "status": outcome.status,
            "exit_status": _exit_status_json(outcome.exit_status),
            "duration_s": round(outcome.duration, 3),
            "output_ref": output_ref,
        })
        self.files.setdefault(mutant.source_path, {})[str(mutant.mutant_id)] = entry
        if save:
            self.save()
        return entry

    def discard_stale(self, records):
        """
        Drop entries that no longer describe the indexed mutant under the same id.

        Parameters:
        - records: mapping path -> {str(mutant_id): index record} of the current index.

        Returns the qualified ids of the dropped entries; their retained outputs are deleted.
        """
        dropped = []
        for path in sorted(self.files, key=natural_key):
            current = records.get(path, {})
            for mutant_id, entry in list(self.files[path].items()):
                record = current.get(mutant_id)
                if record is not None and all(entry.get(key) == record.get(key) for key in IDENTITY_KEYS):
                    continue
                (self.output_dir / entry["output_ref"]).unlink(missing_ok=True)
                del self.files[path][mutant_id]
                dropped.append(qualified_id(path, mutant_id))
            if path not in records:
                del self.files[path]
        if dropped:
            self.save()
        return dropped

    def ensure_file(self, path):
        self.files.setdefault(path, {})

    def entries(self, path):
        return sorted(self.files.get(path, {}).values(), key=lambda entry: natural_key(entry["mutant_id"]))

    def read_output(self, entry):
        return (self.output_dir / entry["output_ref"]).read_bytes()

    def outcomes(self, path=None):
        paths = [path] if path is not None else list(self.files)
        return [entry for each in paths for entry in self.files.get(each, {}).values()]

    def summary(self, path=None):
        return compute_coverage(self.outcomes(path))


FILE_TEMPLATE = Template("""<!DOCTYPE html>
<html>
<head>
<meta charset="utf-8">
<title>Mutation report: {{ path }}</title>
<style>
body { font-family: sans-serif; margin: 2em; }
table.header td { padding: 0 1em 0 0; vertical-align: top; }
pre { background: #f4f4f4; padding: 0.5em; overflow-x: auto; }
.killed, .killed-timeout { color: #1a7f37; }
.survived { color: #cf222e; }
.invalid { color: #6e7781; }
</style>
</head>
<body>
<h1>{{ path }}</h1>
<p>Coverage: {{ summary.percent }} ({{ summary.killed }} killed of {{ summary.total_valid }} valid mutants)</p>
{% if not entries %}
<p>This file has 0 mutants.</p>
{% endif %}
{% for entry in entries %}
<div class="mutant" id="mutant-{{ entry.mutant_id }}">
<h2>Mutant {{ entry.mutant_id }}: <span class="{{ entry.status }}">{{ entry.status }}</span></h2>
<table class="header">
<tr><td>Operator</td><td>{{ entry.operator }}</td></tr>
{% if entry.constituents %}<tr><td>Constituents</td><td>{{ entry.constituents|join(", ") }}</td></tr>{% endif %}
<tr><td>Line</td><td>{{ entry.line }}</td></tr>
<tr><td>Node ids</td><td>{{ entry.node_ids|join(", ") }}</td></tr>
<tr><td>Before</td><td><code>{{ entry.before }}</code></td></tr>
<tr><td>After</td><td><code>{{ entry.after }}</code></td></tr>
<tr><td>Exit status</td><td>{{ entry.exit_status }}</td></tr>
<tr><td>Duration</td><td>{{ "%.3f"|format(entry.duration_s) }} s</td></tr>
</table>
<pre>{{ entry.output }}</pre>
</div>
{% endfor %}
</body>
</html>
""", autoescape=True)

PROJECT_TEMPLATE = Template("""<!DOCTYPE html>
<html>
<head>
<meta charset="utf-8">
<title>Mutation project report</title>
<style>
body { font-family: sans-serif; margin: 2em; }
table { border-collapse: collapse; }
th, td { border: 1px solid #d0d7de; padding: 0.25em 0.75em; text-align: right; }
th:first-child, td:first-child { text-align: left; }
</style>
</head>
<body>
<h1>Mutation project report</h1>
<p>Project coverage: {{ total.percent }} ({{ total.killed }} killed of {{ total.total_valid }} valid mutants)</p>
<table>
<tr><th>File</th><th>Mutants</th><th>Killed</th><th>Survived</th><th>Invalid</th><th>Coverage</th></tr>
{% for row in rows %}
<tr><td><a href="{{ row.report }}">{{ row.path }}</a></td><td>{{ row.mutants }}</td><td>{{ row.killed }}</td>
<td>{{ row.survived }}</td><td>{{ row.invalid }}</td><td>{{ row.percent }}</td></tr>
{% endfor %}
<tr><th>Total</th><th>{{ totals.mutants }}</th><th>{{ total.killed }}</th><th>{{ totals.survived }}</th>
<th>{{ totals.invalid }}</th><th>{{ total.percent }}</th></tr>
</table>
{% if operators %}
<h2>Mutants per operator</h2>
<table>
<tr><th>Operator</th><th>Mutants</th><th>Killed</th></tr>
{% for operator in operators %}
<tr><td>{{ operator.operator }}</td><td>{{ operator.mutants }}</td><td>{{ operator.killed }}</td></tr>
{% endfor %}
</table>
{% endif %}
</body>
</html>
""", autoescape=True)


def emit_file_report(path, entries, outputs=None):
    """
    HTML page for one source file.

    Parameters:
    - path: the source file's relative path.
    - entries: result records of its mutants (any order).
    - outputs: optional mapping mutant_id -> captured build output bytes.
    """
    outputs = outputs or {}
    entries = sorted(entries, key=lambda entry: natural_key(entry["mutant_id"]))
    rendered = [dict(entry, output=outputs.get(str(entry["mutant_id"]), b"").decode("utf-8", "replace"))
                for entry in entries]
    return FILE_TEMPLATE.render(path=path, entries=rendered, summary=compute_coverage(entries))


def report_name(path):
    return path.replace("/", ".") + ".html"


def coverage_table(database):
    """One row per file, columns mutants/killed/survived/invalid/killed_timeout/total_valid/coverage."""
    rows = []
    for path in sorted(database.files, key=natural_key):
        statuses = pd.Series([entry["status"] for entry in database.files[path].values()], dtype=object)
        summary = database.summary(path)
        rows.append({
            "path": path,
            "mutants": len(statuses),
            "killed": int(statuses.isin(KILLED_STATUSES).sum()),
            "killed_timeout": int((statuses == "killed-timeout").sum()),
            "survived": int((statuses == "survived").sum()),
            "invalid": int((statuses == "invalid").sum()),
            "total_valid": summary.total_valid,
            "coverage": summary.coverage,
        })
    columns = ["path", "mutants", "killed", "killed_timeout", "survived", "invalid", "total_valid", "coverage"]
    return pd.DataFrame(rows, columns=columns)


def operator_table(database):
    entries = database.outcomes()
    if not entries:
        return pd.DataFrame(columns=["operator", "mutants", "killed"])
    frame = pd.DataFrame({"operator": [entry["operator"] for entry in entries],
                          "killed": [entry["status"] in KILLED_STATUSES for entry in entries]})
    grouped = frame.groupby("operator").agg(mutants=("killed", "size"), killed=("killed", "sum")).reset_index()
    return grouped.sort_values("operator").reset_index(drop=True)


def emit_project_report(database):
    table = coverage_table(database)
    rows = [dict(row, percent=format_percent(None if pd.isna(row["coverage"]) else row["coverage"]),
                 report=report_name(row["path"]))
            for row in table.to_dict("records")]
    totals = {key: int(table[key].sum()) for key in ("mutants", "survived", "invalid")}
    total = CoverageSummary(killed=int(table["killed"].sum()), total_valid=int(table["total_valid"].sum()))
    operators = operator_table(database).to_dict("records")
    return PROJECT_TEMPLATE.render(rows=rows, totals=totals, total=total, operators=operators)


def text_report(database):
    lines = []
    for path in sorted(database.files, key=natural_key):
        entries = database.entries(path)
        summary = database.summary(path)
        lines.append(f"{path}: {summary.percent} ({summary.killed}/{summary.total_valid})")
        for status in ("survived", "killed", "killed-timeout", "invalid"):
            ids = [str(entry["mutant_id"]) for entry in entries if entry["status"] == status]
            if ids:
                lines.append(f"  {status}: {', '.join(ids)}")
        lines.append(f"  time: {sum(entry['duration_s'] for entry in entries):.1f} s")
    total = database.summary()
    lines.append(f"Total: {total.percent} ({total.killed}/{total.total_valid})")
    return "\n".join(lines) + "\n"


def write_reports(database):
    """Write reports/*.html, coverage.csv and report.txt next to results.json."""
    report_dir = database.output_dir / "reports"
    report_dir.mkdir(parents=True, exist_ok=True)
    for path in sorted(database.files, key=natural_key):
        entries = database.entries(path)
        outputs = {str(entry["mutant_id"]): database.read_output(entry) for entry in entries}
        write_atomic(report_dir / report_name(path), emit_file_report(path, entries, outputs))
    write_atomic(report_dir / "index.html", emit_project_report(database))
    coverage_table(database).to_csv(database.output_dir / "coverage.csv", index=False)
    write_atomic(database.output_dir / "report.txt", text_report(database))
    total = database.summary()
    logger.info("mutation coverage %s (%d killed of %d valid)", total.percent, total.killed, total.total_valid)
    return total
