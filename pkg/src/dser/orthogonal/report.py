"""JSON run reports."""

from __future__ import annotations

import sys
from datetime import datetime, timezone
from pathlib import Path
from typing import Any

from pydantic import BaseModel, ConfigDict, Field

SCHEMA = "dser-report/1"


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


class Report(BaseModel):
    """One subcommand's findings; ``generated_at`` is the only field that varies between runs."""

    model_config = ConfigDict(populate_by_name=True)

    schema_: str = Field(default=SCHEMA, alias="schema")
    command: str
    config: dict[str, Any]
    passed: bool
    results: dict[str, Any]
    generated_at: str = Field(default_factory=_now)

    def to_json(self) -> str:
        return self.model_dump_json(indent=2, by_alias=True)


def write_report(report: Report, output: Path | None = None) -> None:
    """Write the report to ``output`` or, without one, to stdout."""
    text = report.to_json()
    if output is None:
        sys.stdout.write(text + "\n")
        return
    output = Path(output)
    output.parent.mkdir(parents=True, exist_ok=True)
    output.write_text(text + "\n", encoding="utf-8")
    print(f"info: report written to {output}", file=sys.stderr)
