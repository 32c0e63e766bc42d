"""Plain-text metric tables and the per-frame metrics document."""
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from apparelmotion.evaluation.metrics import MetricReport, evaluate_clip
from apparelmotion.geometry.character import RiggedCharacter

CENTIMETERS = 100.0
COLUMNS = ("PMD (cm)", "PMD_a (cm)", "PMD_b (cm)", "ELS", "Penetration")


def _cells(report: MetricReport) -> List[str]:
    penetration = "-" if report.penetration is None else f"{report.penetration:.3f}"
    return [
        f"{report.pmd * CENTIMETERS:.2f}",
        f"{report.pmd_apparel * CENTIMETERS:.2f}",
        f"{report.pmd_body * CENTIMETERS:.2f}",
        f"{report.els:.2f}",
        penetration,
    ]


def format_table(rows: Sequence[Tuple[str, MetricReport]]) -> str:
    """Left-aligned names followed by right-aligned metric columns.

    >>> print(format_table([("Full Model", MetricReport(0.0108, 0.0191, 0.0075, 0.94, None))]))
    Variant     PMD (cm)  PMD_a (cm)  PMD_b (cm)   ELS  Penetration
    Full Model      1.08        1.91        0.75  0.94            -
    """
    table = [["Variant", *COLUMNS]] + [[name, *_cells(report)] for name, report in rows]
    widths = [max(len(row[column]) for row in table) for column in range(len(table[0]))]
    lines = []
    for row in table:
        cells = [row[0].ljust(widths[0])] + [
            cell.rjust(width) for cell, width in zip(row[1:], widths[1:])
        ]
        lines.append("  ".join(cells).rstrip())
    return "\n".join(lines)


def report_dict(report: MetricReport) -> Dict[str, float]:
    """Metric values in meters, without missing entries."""
    return {key: value for key, value in report._asdict().items() if value is not None}


def metrics_document(
    predicted: np.ndarray,
    ground_truth: np.ndarray,
    edges: np.ndarray,
    apparel_mask: np.ndarray,
    character: Optional[RiggedCharacter] = None,
    joint_translations: Optional[np.ndarray] = None,
) -> Dict[str, Any]:
    """A `summary` table over the clip and one `frames` entry per frame."""
    frames = []
    for frame in range(len(predicted)):
        translations = None if joint_translations is None else joint_translations[frame : frame + 1]
        report = evaluate_clip(
            predicted[frame : frame + 1],
            ground_truth[frame : frame + 1],
            edges,
            apparel_mask,
            character,
            translations,
        )
        frames.append({"frame": frame, **report_dict(report)})
    summary = evaluate_clip(
        predicted, ground_truth, edges, apparel_mask, character, joint_translations
    )
    return {"summary": report_dict(summary), "frames": frames}
