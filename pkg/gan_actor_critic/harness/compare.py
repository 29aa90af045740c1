from __future__ import annotations

import logging
import statistics
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

from gan_actor_critic.core.errors import SpecMismatchError
from gan_actor_critic.core.models import MetricsRow

from .metrics import METRICS_FILE, RunManifest, episodes_to_solve, read_metrics

logger = logging.getLogger(__name__)

REPORT_FILE = "comparison.txt"


@dataclass
class SeedOutcome:
    """Episodes-to-solve of one seed; an unsolved seed counts the whole budget and is censored."""

    seed: int
    episodes_to_solve: int
    censored: bool


@dataclass
class RunSummary:
    path: Path
    manifest: RunManifest
    outcomes: Dict[int, SeedOutcome]

    @property
    def median(self) -> float:
        return float(statistics.median(o.episodes_to_solve for o in self.outcomes.values()))


@dataclass
class ComparisonReport:
    env: str
    solve_threshold: float
    run_a: RunSummary
    run_b: RunSummary
    median_ratio: float
    table: List[Tuple[int, str]] = field(default_factory=list)

    @property
    def wins(self) -> int:
        return sum(1 for _, winner in self.table if winner == "a")

    @property
    def losses(self) -> int:
        return sum(1 for _, winner in self.table if winner == "b")

    @property
    def ties(self) -> int:
        return sum(1 for _, winner in self.table if winner == "tie")

    def render(self) -> str:
        a, b = self.run_a, self.run_b
        lines = [
            f"env {self.env}  solve threshold {self.solve_threshold}",
            f"a: {a.manifest.variant} ({a.path})",
            f"b: {b.manifest.variant} ({b.path})",
            "",
            f"{'seed':>6}  {'a':>10}  {'b':>10}  winner",
        ]
        seeds = sorted(set(a.outcomes) | set(b.outcomes))
        winners = dict(self.table)
        for seed in seeds:
            lines.append(
                f"{seed:>6}  {_cell(a.outcomes.get(seed)):>10}  {_cell(b.outcomes.get(seed)):>10}  "
                f"{winners.get(seed, '-')}"
            )
        lines.append("")
        lines.append(f"median a {a.median:g}  median b {b.median:g}  ratio a/b {self.median_ratio:.4g}")
        lines.append(f"wins {self.wins}  losses {self.losses}  ties {self.ties}")
        return "\n".join(lines) + "\n"

    def write(self, out_dir: Union[str, Path]) -> Path:
        path = Path(out_dir) / REPORT_FILE
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.render(), encoding="utf-8")
        return path


def _cell(outcome: SeedOutcome | None) -> str:
    if outcome is None:
        return "-"
    return f"{outcome.episodes_to_solve}{'*' if outcome.censored else ''}"


def summarize_run(run_dir: Union[str, Path]) -> RunSummary:
    path = Path(run_dir)
    manifest = RunManifest.read(path)
    rows = read_metrics(path / METRICS_FILE)
    by_seed: Dict[int, List[MetricsRow]] = {seed: [] for seed in manifest.seeds}
    for row in rows:
        by_seed.setdefault(row.seed, []).append(row)
    outcomes: Dict[int, SeedOutcome] = {}
    for seed, seed_rows in by_seed.items():
        solved = episodes_to_solve(seed_rows, manifest.solve_threshold, manifest.solve_min_episodes)
        outcomes[seed] = SeedOutcome(
            seed=seed,
            episodes_to_solve=manifest.episodes if solved is None else solved,
            censored=solved is None,
        )
    return RunSummary(path=path, manifest=manifest, outcomes=outcomes)


def compare(
    run_a: Union[str, Path], run_b: Union[str, Path], *, seed: Optional[int] = None
) -> ComparisonReport:
    """Episodes-to-solve of two runs of the same task, seed by seed.

    With ``seed`` only that seed of each run enters the table and the medians.
    """

    a = summarize_run(run_a)
    b = summarize_run(run_b)
    if seed is not None:
        for summary in (a, b):
            if seed not in summary.outcomes:
                raise SpecMismatchError(f"Seed {seed} is not part of run {summary.path}")
            summary.outcomes = {seed: summary.outcomes[seed]}
    if a.manifest.env != b.manifest.env:
        raise SpecMismatchError(f"Runs trained on different environments: {a.manifest.env} vs {b.manifest.env}")
    if a.manifest.solve_threshold != b.manifest.solve_threshold:
        raise SpecMismatchError(
            f"Runs use different solve thresholds: {a.manifest.solve_threshold} vs {b.manifest.solve_threshold}"
        )
    if a.manifest.solve_min_episodes != b.manifest.solve_min_episodes:
        raise SpecMismatchError(
            "Runs use different solve windows: "
            f"{a.manifest.solve_min_episodes} vs {b.manifest.solve_min_episodes} episodes"
        )
    if not a.outcomes or not b.outcomes:
        raise SpecMismatchError("Both runs need at least one seed to compare")

    table: List[Tuple[int, str]] = []
    for seed in sorted(set(a.outcomes) & set(b.outcomes)):
        left, right = a.outcomes[seed].episodes_to_solve, b.outcomes[seed].episodes_to_solve
        table.append((seed, "a" if left < right else "b" if right < left else "tie"))
    ratio = a.median / b.median if b.median > 0 else float("nan")
    logger.debug("Compared %s with %s", a.path, b.path, extra={"median_ratio": ratio})
    return ComparisonReport(
        env=a.manifest.env,
        solve_threshold=a.manifest.solve_threshold,
        run_a=a,
        run_b=b,
        median_ratio=ratio,
        table=table,
    )


__all__ = ["REPORT_FILE", "ComparisonReport", "RunSummary", "SeedOutcome", "compare", "summarize_run"]
