"""Batch execution of CLI subcommands.

Each handler takes a validated RunConfig, runs the computation, writes its
result files through ResultsWriter and returns a JSON-ready summary.
"""

from __future__ import annotations

from collections.abc import Callable
from pathlib import Path
from typing import Any

from app.core.config import Settings
from app.core.errors import ConfigValidationError
from app.core.logging import LoggerMixin
from app.domain.models.phase import StateKind
from app.persistence.results_writer import ResultsWriter, read_states_csv
from app.persistence.scatter_plot import ScatterStyle, emit_scatter_svg
from app.schemas.reports import InterlacingViolation, StateRow
from app.schemas.run_config import RunConfig, SweepConfig
from app.services.config_loader import dump_config
from app.services.experiments import figure1, h_sweep, interlacing_check, lemma_suite
from app.services.spectra import find_states

COMMANDS = ("states", "sweep", "interlace", "lemmas", "figure1", "plot")


class BatchService(LoggerMixin):
    """Runs one subcommand against a run directory."""

    def __init__(self, settings: Settings, config: RunConfig):
        self.settings = settings
        self.config = config
        self.writer = ResultsWriter(config.out_dir)

    def run(self, command: str) -> dict[str, Any]:
        handlers: dict[str, Callable[[], dict[str, Any]]] = {
            "states": self.run_states,
            "sweep": self.run_sweep,
            "interlace": self.run_interlace,
            "lemmas": self.run_lemmas,
            "figure1": self.run_figure1,
            "plot": self.run_plot,
        }
        if command not in handlers:
            raise ConfigValidationError(
                f"Unknown command: {command}", details={"field": "command", "choices": COMMANDS}
            )
        self.logger.info("command_started", command=command, out_dir=self.config.out_dir)
        self.writer.out_dir.mkdir(parents=True, exist_ok=True)
        (self.writer.out_dir / "config.json").write_bytes(dump_config(self.config))
        summary = handlers[command]()
        self.logger.info("command_finished", command=command, **summary)
        return {"command": command, "out_dir": str(self.writer.out_dir), **summary}

    def _sweep_config(self) -> SweepConfig:
        return self.config.to_sweep_config(self.settings)

    def _find_all(self, sweep: SweepConfig, kinds: list[StateKind]) -> dict[float, dict]:
        lo, hi = sweep.band
        found: dict[float, dict] = {}
        for h in sweep.h_values:
            found[h] = {
                kind: [
                    record
                    for bc in sweep.right_bcs
                    for record in find_states(
                        sweep.potential,
                        h,
                        kind,
                        lo,
                        hi,
                        sweep.grid_n,
                        sweep.tol,
                        x_match=sweep.x_match,
                        right_bc=bc,
                        ode_tol=sweep.ode_tol,
                        engine=sweep.engine,
                        max_samples=sweep.max_samples,
                    )
                ]
                for kind in kinds
            }
        return found

    def run_states(self) -> dict[str, Any]:
        sweep = self._sweep_config()
        found = self._find_all(sweep, self.config.kinds)
        rows = [
            StateRow.from_record(record)
            for by_kind in found.values()
            for records in by_kind.values()
            for record in records
        ]
        path = self.writer.write_states(rows)
        return {"n_states": len(rows), "states_csv": str(path)}

    def run_sweep(self) -> dict[str, Any]:
        report = h_sweep(self._sweep_config(), threads=self.settings.numerics.threads)
        self.writer.write_states(report.rows())
        self.writer.write_pairs(report.pairs())
        self.writer.write_fit(report.gap_fit, error=report.fit_errors.get("gap"))
        self.writer.write_json(report, "sweep.json")
        fit = report.gap_fit
        return {
            "n_states": len(report.rows()),
            "n_pairs": len(report.pairs()),
            "n_failed_h": len(report.failed),
            "delta_hat": fit.delta_hat if fit else None,
            "r_squared": fit.r_squared if fit else None,
            "first_paired_h": report.first_paired_h,
        }

    def run_interlace(self) -> dict[str, Any]:
        sweep = self._sweep_config()
        found = self._find_all(sweep, [StateKind.BOUND, StateKind.ANTIBOUND])
        violations: list[InterlacingViolation] = []
        rows: list[StateRow] = []
        for h, by_kind in found.items():
            violations.extend(
                interlacing_check(
                    by_kind[StateKind.BOUND], by_kind[StateKind.ANTIBOUND], h=h, tol=sweep.tol
                )
            )
            rows.extend(StateRow.from_record(r) for recs in by_kind.values() for r in recs)
        resolved = [v for v in violations if not v.unresolved]
        unresolved = [v for v in violations if v.unresolved]
        self.writer.write_states(rows)
        self.writer.write_json(
            {
                "violations": [v.model_dump(mode="json") for v in resolved],
                "unresolved": [v.model_dump(mode="json") for v in unresolved],
            },
            "interlacing.json",
        )
        return {
            "n_states": len(rows),
            "n_violations": len(resolved),
            "n_unresolved": len(unresolved),
        }

    def run_lemmas(self) -> dict[str, Any]:
        potential = self._sweep_config().potential
        report = lemma_suite(
            potential,
            self.config.lemma_k,
            self.config.lemma_h,
            tol=self.config.ode_tol or self.settings.numerics.ode_tol,
            slack=self.config.check_slack,
            cone_fraction=self.config.cone_fraction,
            engine=self.config.engine,
        )
        self.writer.write_json(report, "lemmas.json")
        return {
            "passed": report.passed,
            "n_checks": len(report.checks),
            "n_skipped": report.n_skipped,
            "worst_margins": report.worst_margins(),
        }

    def run_figure1(self) -> dict[str, Any]:
        reports = figure1(
            self.config.h,
            band=self.config.band,
            grid_n=self.config.grid_n,
            tol=self.config.tol,
            ode_tol=self.config.ode_tol,
            threads=self.settings.numerics.threads,
        )
        summary: dict[str, Any] = {}
        for name, report in reports.items():
            sub = ResultsWriter(Path(self.config.out_dir) / name)
            rows = report.rows()
            sub.write_states(rows)
            sub.write_pairs(report.pairs())
            emit_scatter_svg(
                rows,
                sub.out_dir / "scatter.svg",
                ScatterStyle(title=f"Even spline potential ({name})"),
            )
            summary[f"{name}_n_states"] = len(rows)
        return summary

    def run_plot(self) -> dict[str, Any]:
        if self.config.input_csv is None:
            raise ConfigValidationError("plot needs input_csv", details={"field": "input_csv"})
        rows = read_states_csv(self.config.input_csv)
        path = emit_scatter_svg(rows, self.writer.out_dir / "scatter.svg")
        return {"n_rows": len(rows), "scatter_svg": str(path)}
