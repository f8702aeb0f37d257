import os
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent

# Released-dataset checks look here; they skip when the data is absent.
# See README ("Released dataset") for the expected layout.
DATASET_DIR = Path(os.environ.get("INQUEST_DATA_DIR", ROOT / "data" / "qsalience"))


def dataset_available() -> bool:
    return (DATASET_DIR / "articles.jsonl").exists() and (
        DATASET_DIR / "salience.jsonl"
    ).exists()


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One pass/fail/skip line per acceptance criterion."""
    rows = []
    for outcome in ("passed", "failed", "skipped"):
        for report in terminalreporter.stats.get(outcome, []):
            nodeid = getattr(report, "nodeid", "")
            if "test_acceptance" not in nodeid:
                continue
            if outcome != "skipped" and getattr(report, "when", "call") != "call":
                continue
            rows.append((nodeid.split("::")[-1], outcome.upper()))
    if rows:
        terminalreporter.write_sep("-", "acceptance criteria")
        for name, outcome in sorted(set(rows)):
            terminalreporter.write_line(f"{outcome:8s} {name}")
