"""Result files of a run directory.

Files: states.csv, pairs.csv, fit.json, lemmas.json, config.json.
Floats in CSV files carry 15 significant digits.
"""

from __future__ import annotations

import csv
from collections.abc import Iterable
from pathlib import Path
from typing import Any

import orjson
from pydantic import BaseModel

from app.core.logging import get_logger
from app.domain.models.phase import StateKind
from app.schemas.reports import DecayFit, PairRecord, StateRow

logger = get_logger(__name__)

STATES_HEADER = ("h", "inv_h", "kind", "k", "winding", "residual", "dmismatch_dk")
PAIRS_HEADER = ("h", "k0", "k_plus", "k_minus", "gap_plus", "gap_minus")


def format_float(value: float | None) -> str:
    return "" if value is None else f"{value:.15g}"


class ResultsWriter:
    """Writes and reads the result files of one output directory."""

    def __init__(self, out_dir: str | Path):
        self.out_dir = Path(out_dir)

    def _path(self, name: str) -> Path:
        self.out_dir.mkdir(parents=True, exist_ok=True)
        return self.out_dir / name

    def write_states(self, rows: Iterable[StateRow], name: str = "states.csv") -> Path:
        """Rows sorted by (h descending, kind, k); an empty run gives a header-only file."""
        path = self._path(name)
        ordered = sorted(rows, key=StateRow.sort_key)
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(STATES_HEADER)
            for row in ordered:
                writer.writerow(
                    [
                        format_float(row.h),
                        format_float(row.inv_h),
                        row.kind.value,
                        format_float(row.k),
                        row.winding,
                        format_float(row.residual),
                        format_float(row.dmismatch_dk),
                    ]
                )
        logger.info("states_written", path=str(path), n_rows=len(ordered))
        return path

    def write_pairs(self, pairs: Iterable[PairRecord], name: str = "pairs.csv") -> Path:
        path = self._path(name)
        n = 0
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(PAIRS_HEADER)
            for pair in pairs:
                writer.writerow([format_float(getattr(pair, col)) for col in PAIRS_HEADER])
                n += 1
        logger.info("pairs_written", path=str(path), n_rows=n)
        return path

    def write_fit(
        self, fit: DecayFit | None, error: str | None = None, name: str = "fit.json"
    ) -> Path:
        if fit is None:
            payload: dict[str, Any] = {
                "delta_hat": None,
                "logC_hat": None,
                "r_squared": None,
                "error": error,
            }
        else:
            payload = fit.model_dump()
        return self.write_json(payload, name)

    def write_json(self, payload: BaseModel | dict[str, Any], name: str) -> Path:
        path = self._path(name)
        data = payload.model_dump(mode="json") if isinstance(payload, BaseModel) else payload
        options = orjson.OPT_INDENT_2 | orjson.OPT_SERIALIZE_NUMPY
        path.write_bytes(orjson.dumps(data, option=options))
        logger.debug("json_written", path=str(path))
        return path


def read_states_csv(path: str | Path) -> list[StateRow]:
    """Parse a states.csv back into rows."""
    with Path(path).open(newline="") as fh:
        return [
            StateRow(
                h=float(rec["h"]),
                inv_h=float(rec["inv_h"]),
                kind=StateKind(rec["kind"]),
                k=float(rec["k"]),
                winding=int(rec["winding"]),
                residual=float(rec["residual"]),
                dmismatch_dk=float(rec["dmismatch_dk"]),
            )
            for rec in csv.DictReader(fh)
        ]
