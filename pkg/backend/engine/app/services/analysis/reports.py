"""Reporting tables built from a finished run's artifacts."""

from __future__ import annotations

import logging
import re
from enum import Enum

import numpy as np
import pandas as pd

from ..effects import estimand_names
from ..errors import ArtifactNotFoundError
from ..storage import ArtifactStore
from .pipeline import METADATA_NAME, unstamp

logger = logging.getLogger(__name__)

EFFECT_ROWS = ("EDE", "EAE-", "EAE+")
REPORT_COLUMNS = ["estimand", "mean", "sd", "q2.5", "q97.5", "p_negative"]
OPTIONAL_ARTIFACTS = {
    "sensitivity.csv": "no sensitivity grid was configured",
    "strata_cross.csv": "fewer than two mediators, or no strata pair requested",
    "diagnostics.csv": "the diagnose stage has not been run",
    "prior_comparison.csv": "run without --compare-priors",
}
_PRINCIPAL_LABEL = re.compile(r"^(EDE|EAE-|EAE\+)(\{[0-9,]+\})$")


class ExportFormat(str, Enum):
    CSV = "csv"
    SUMMARY_TEXT = "summary-text"


def _load(store: ArtifactStore, name: str) -> pd.DataFrame:
    if not store.exists(name):
        raise ArtifactNotFoundError(f"{name} is missing from {store.root}")
    return unstamp(store.load_table(name))


def _order_key(k: int) -> dict[str, int]:
    """TE, NDE, single NIEs, pairwise JNIEs, JNIE, overlaps, then NIE* if present."""
    names = estimand_names(k, nie_star=True)
    pairs = [n for n in names if n.startswith("JNIE_")]
    overlaps = [n for n in names if n.startswith("OVERLAP_")]
    singles = [n for n in names if n.startswith("NIE_")]
    stars = [n for n in names if n.startswith("NIE*_")]
    ordered = ["TE", "NDE", *singles, *pairs, "JNIE", *overlaps, *stars]
    return {name: i for i, name in enumerate(ordered)}


def mediation_table(summary: pd.DataFrame, k: int) -> pd.DataFrame:
    order = _order_key(k)
    table = summary[summary["estimand"].isin(list(order))].copy()
    table["_order"] = table["estimand"].map(order)
    return table.sort_values("_order")[REPORT_COLUMNS].reset_index(drop=True)


def _cell(mean: float, sd: float) -> str:
    if np.isnan(mean):
        return "NA"
    return f"{mean:.3f} ({sd:.3f})"


def principal_table(summary: pd.DataFrame) -> pd.DataFrame:
    """EDE / EAE- / EAE+ rows against mediator-subset columns, ``mean (sd)`` cells."""
    cells: dict[str, dict[str, str]] = {}
    columns: list[str] = []
    for row in summary.itertuples(index=False):
        match = _PRINCIPAL_LABEL.match(row.estimand)
        if match is None:
            continue
        effect, subset = match.groups()
        if subset not in columns:
            columns.append(subset)
        cells.setdefault(effect, {})[subset] = _cell(row.mean, row.sd)
    table = pd.DataFrame(
        [{"effect": e, **cells.get(e, {})} for e in EFFECT_ROWS], columns=["effect", *columns]
    )
    return table.fillna("NA")


def _text_block(title: str, table: pd.DataFrame) -> str:
    return f"{title}\n{'=' * len(title)}\n{table.to_string(index=False, float_format='%.4f')}\n"


def summary_text(
    metadata: dict,
    mediation: pd.DataFrame,
    principal: pd.DataFrame,
    notes: list[str],
) -> str:
    switches = metadata.get("switches", {})
    lines = [
        "Mediation analysis summary",
        "",
        f"seed: {metadata.get('seed')}",
        f"config hash: {metadata.get('config_hash')}",
        f"dataset: {metadata.get('dataset')}",
        f"threads: {metadata.get('threads')}",
    ]
    lines += [f"{key}: {value}" for key, value in switches.items() if value is not None]
    lines += ["", _text_block("Mediation effects", mediation)]
    lines += [_text_block("Principal stratum effects, mean (sd)", principal)]
    if notes:
        lines += ["Notes", "=====", *(f"- {note}" for note in notes)]
    return "\n".join(lines) + "\n"


def export_results(store: ArtifactStore, fmt: ExportFormat | str = ExportFormat.CSV) -> list[str]:
    """Write report tables next to the run's artifacts and return their locations.

    Raises:
        ArtifactNotFoundError: the effects summaries or run metadata are missing.
    """
    fmt = ExportFormat(fmt)
    if not store.exists(METADATA_NAME):
        raise ArtifactNotFoundError(f"{METADATA_NAME} is missing from {store.root}")
    metadata = store.load_json(METADATA_NAME)
    k = int(metadata["dataset"]["k"])
    mediation = mediation_table(_load(store, "effects_summary.csv"), k)
    principal = principal_table(_load(store, "principal_summary.csv"))
    notes = [
        f"{name} absent: {reason}"
        for name, reason in OPTIONAL_ARTIFACTS.items()
        if not store.exists(name)
    ]
    for note in notes:
        logger.info(note)

    if fmt is ExportFormat.CSV:
        written = [
            store.save_table("mediation_table.csv", mediation),
            store.save_table("principal_table.csv", principal),
        ]
    else:
        text = summary_text(metadata, mediation, principal, notes)
        written = [store.save_bytes("summary.txt", text.encode("utf-8"))]
    logger.info("Exported %s", ", ".join(written))
    return written
