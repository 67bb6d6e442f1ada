import csv
import io
import json
from decimal import ROUND_HALF_EVEN, Decimal, localcontext
from fractions import Fraction
from typing import Any, Optional

from rich.console import Group, RenderableType
from rich.table import Table
from rich.text import Text

from superell.comparator import DistributionComparator, OutcomeRow
from superell.models import ExperimentReport, Outcome

CSV_HEADER = ("outcome", "count", "empirical", "theory")
DECIMAL_PLACES = 12


def _outcome_json(outcome: Outcome) -> int | list[int]:
    return list(outcome) if isinstance(outcome, tuple) else outcome


def _outcome_text(outcome: Outcome) -> str:
    if isinstance(outcome, tuple):
        return ";".join(str(k) for k in outcome)
    return str(outcome)


def _fraction_json(x: Optional[Fraction]) -> Optional[dict[str, str]]:
    if x is None:
        return None
    return {"num": str(x.numerator), "den": str(x.denominator)}


def decimal_string(x: Fraction, places: int = DECIMAL_PLACES) -> str:
    """x rounded half-even to `places` decimals, computed exactly."""
    with localcontext() as ctx:
        ctx.prec = len(str(x.numerator)) + len(str(x.denominator)) + places + 10
        value = Decimal(x.numerator) / Decimal(x.denominator)
        return format(value.quantize(Decimal(1).scaleb(-places), rounding=ROUND_HALF_EVEN), "f")


class ReportGenerator:
    """Renders ExperimentReports as JSON, CSV or rich tables."""

    def __init__(self, comparator: Optional[DistributionComparator] = None):
        self.comparator = comparator or DistributionComparator()

    def _rows(self, report: ExperimentReport) -> list[OutcomeRow]:
        return self.comparator.rows(report.histogram, dict(report.theory))

    def to_dict(self, report: ExperimentReport) -> dict[str, Any]:
        """
        Stable JSON structure; exact rationals are {num, den} with decimal
        string integers.
        """
        tv = report.tv
        out: dict[str, Any] = {
            "kind": report.kind,
            "config": report.config,
            "field": report.field_info,
            "seed": report.seed,
            "trials": report.trials,
            "histogram": [
                {"outcome": _outcome_json(o), "count": c} for o, c in report.histogram.items()
            ],
            "normalized": [
                {"outcome": _outcome_json(o), "num": str(v.numerator), "den": str(v.denominator)}
                for o, v in report.histogram.normalized().items()
            ]
            if report.trials
            else [],
            "theory": [
                {"outcome": _outcome_json(o), "num": str(v.numerator), "den": str(v.denominator)}
                for o, v in report.theory
            ],
            "tv": None
            if tv is None
            else {"num": str(tv.numerator), "den": str(tv.denominator), "float": float(tv)},
            "mean": _fraction_json(report.mean),
            "runtime_ms": report.runtime_ms,
            "version": report.version,
            "generator": report.generator,
            "counters": report.counters,
            "passed": report.passed,
        }
        if report.cases:
            out["cases"] = report.cases
        if report.notes:
            out["notes"] = report.notes
        out.update(report.extras)
        return out

    def generate_json(self, report: ExperimentReport) -> str:
        return json.dumps(self.to_dict(report), indent=2) + "\n"

    def generate_csv(self, report: ExperimentReport) -> str:
        """
        Histogram reports use the fixed header outcome,count,empirical,theory;
        verification reports list one row per case.
        """
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        if report.cases and not report.trials:
            columns: list[str] = []
            for case in report.cases:
                columns.extend(k for k in case if k not in columns)
            writer.writerow(columns)
            for case in report.cases:
                writer.writerow([self._cell(case.get(k)) for k in columns])
            return buffer.getvalue()

        writer.writerow(CSV_HEADER)
        for row in self._rows(report):
            writer.writerow(
                [
                    _outcome_text(row.outcome),
                    row.count,
                    decimal_string(row.empirical),
                    decimal_string(row.theory),
                ]
            )
        return buffer.getvalue()

    @staticmethod
    def _cell(value: Any) -> str:
        if value is None:
            return ""
        if isinstance(value, (dict, list)):
            return json.dumps(value, separators=(",", ":"))
        return str(value)

    def generate_table(self, report: ExperimentReport) -> RenderableType:
        """Human-facing rendering for --out table."""
        title = f"{report.kind} ({report.field_info.get('modulus', '')})".replace(" ()", "")
        parts: list[RenderableType] = []

        if report.trials or report.theory:
            table = Table(title=title)
            table.add_column("outcome", justify="right")
            table.add_column("count", justify="right")
            table.add_column("empirical", justify="right")
            table.add_column("theory", justify="right")
            for row in self._rows(report):
                table.add_row(
                    _outcome_text(row.outcome),
                    str(row.count),
                    f"{float(row.empirical):.6f}",
                    f"{float(row.theory):.6f}  ({row.theory})",
                )
            parts.append(table)

        if report.cases:
            columns: list[str] = []
            for case in report.cases:
                columns.extend(k for k in case if k not in columns)
            cases = Table(title=f"{title} cases")
            for column in columns:
                cases.add_column(column)
            for case in report.cases:
                status = case.get("status")
                style = {"failed": "red", "skipped": "yellow"}.get(str(status))
                cases.add_row(*(Text(self._cell(case.get(k))) for k in columns), style=style)
            parts.append(cases)

        summary = [f"trials {report.trials}"]
        if report.tv is not None:
            summary.append(f"TV {float(report.tv):.6f}")
        if report.mean is not None:
            summary.append(f"mean {report.mean} ({float(report.mean):.6f})")
        summary.extend(report.notes)
        summary.append("passed" if report.passed else "FAILED")
        parts.append(Text(" | ".join(summary), style="" if report.passed else "bold red"))
        return Group(*parts)
