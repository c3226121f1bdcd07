"""Allocation of variation for balanced full-factorial response tables.

The decomposition follows the classic experimental-design recipe: overall
mean, per-level main effects, first-order interactions, total variation as
sum(result^2) - N * mean^2, and per-term variation as the squared effects
scaled by the number of runs sharing each level (or level pair). Anything
not explained by main effects and first-order interactions is reported as
a single residual bucket (higher-order interactions).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations, product
from typing import Iterable, Mapping, Sequence

from .factorial import Factor


class AnovaError(ValueError):
    pass


class ResponseTable:
    """Scalar responses of a balanced full factorial, keyed by level tuple."""

    def __init__(self, factors: Sequence[Factor]):
        if not factors:
            raise AnovaError("need at least one factor")
        names = [f.name for f in factors]
        if len(set(names)) != len(names):
            raise AnovaError(f"duplicate factor names in {names}")
        self.factors = list(factors)
        self._index = {f.name: i for i, f in enumerate(self.factors)}
        self._values: dict[tuple, float] = {}

    def add(self, levels: tuple, value: float) -> None:
        if len(levels) != len(self.factors):
            raise AnovaError(f"level tuple {levels!r} has wrong arity")
        for f, level in zip(self.factors, levels):
            if level not in f.levels:
                raise AnovaError(f"unknown level {level!r} for factor {f.name}")
        if levels in self._values:
            raise AnovaError(f"duplicate cell {levels!r}")
        if not math.isfinite(value):
            raise AnovaError(f"non-finite response at {levels!r}")
        self._values[levels] = value

    def __len__(self) -> int:
        return len(self._values)

    @property
    def size_if_complete(self) -> int:
        n = 1
        for f in self.factors:
            n *= len(f.levels)
        return n

    def require_complete(self) -> None:
        if len(self._values) != self.size_if_complete:
            missing = self.size_if_complete - len(self._values)
            raise AnovaError(
                f"table is not a complete full factorial: {missing} cells missing")

    def values(self) -> Iterable[float]:
        return self._values.values()

    def items(self):
        return self._values.items()

    def factor_position(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise AnovaError(f"unknown factor {name!r}") from None


def overall_mean(table: ResponseTable) -> float:
    if len(table) == 0:
        raise AnovaError("empty response table")
    return math.fsum(table.values()) / len(table)


def level_mean(table: ResponseTable, factor: str, level) -> float:
    pos = table.factor_position(factor)
    picked = [v for key, v in table.items() if key[pos] == level]
    if not picked:
        raise AnovaError(f"no rows with {factor}={level!r}")
    return math.fsum(picked) / len(picked)


def main_effect(table: ResponseTable, factor: str, level) -> float:
    return level_mean(table, factor, level) - overall_mean(table)


def interaction(table: ResponseTable, a: tuple[str, object],
                b: tuple[str, object]) -> float:
    (fa, la), (fb, lb) = a, b
    if fa == fb:
        raise AnovaError(f"interaction needs two distinct factors, got {fa!r} twice")
    pa, pb = table.factor_position(fa), table.factor_position(fb)
    picked = [v for key, v in table.items() if key[pa] == la and key[pb] == lb]
    if not picked:
        raise AnovaError(f"no rows with {fa}={la!r}, {fb}={lb!r}")
    cell_mean = math.fsum(picked) / len(picked)
    return (cell_mean - overall_mean(table)
            - main_effect(table, fa, la) - main_effect(table, fb, lb))


def total_variation(table: ResponseTable) -> float:
    if len(table) == 0:
        raise AnovaError("empty response table")
    mean = overall_mean(table)
    sum_sq = math.fsum(v * v for v in table.values())
    return sum_sq - len(table) * mean * mean


@dataclass
class AnovaReport:
    response: str
    num_runs: int
    overall_mean: float
    total_variation: float
    main_effects: dict[str, dict[object, float]]
    interactions: dict[tuple[str, str], dict[tuple, float]]
    variation: dict[object, float]          # factor name or (name, name) pair
    residual_variation: float = 0.0

    def allocation_pct(self) -> dict[object, float]:
        if self.total_variation == 0:
            return {term: 0.0 for term in self.variation}
        return {term: 100.0 * v / self.total_variation
                for term, v in self.variation.items()}

    def residual_pct(self) -> float:
        if self.total_variation == 0:
            return 0.0
        return 100.0 * self.residual_variation / self.total_variation

    def ranked_terms(self) -> list[tuple[object, float]]:
        pct = self.allocation_pct()
        return sorted(pct.items(), key=lambda kv: kv[1], reverse=True)


def allocate_variation(table: ResponseTable,
                       response: str = "response") -> AnovaReport:
    """Full decomposition into main effects and first-order interactions."""
    table.require_complete()
    n = len(table)
    mean = overall_mean(table)
    factors = table.factors

    # single pass accumulation of level sums and pair sums
    level_sums: list[dict] = [dict.fromkeys(f.levels, 0.0) for f in factors]
    level_counts: list[dict] = [dict.fromkeys(f.levels, 0) for f in factors]
    pairs = list(combinations(range(len(factors)), 2))
    pair_sums: dict[tuple[int, int], dict] = {p: {} for p in pairs}
    pair_counts: dict[tuple[int, int], dict] = {p: {} for p in pairs}
    for key, v in table.items():
        for i, level in enumerate(key):
            level_sums[i][level] += v
            level_counts[i][level] += 1
        for p in pairs:
            cell = (key[p[0]], key[p[1]])
            pair_sums[p][cell] = pair_sums[p].get(cell, 0.0) + v
            pair_counts[p][cell] = pair_counts[p].get(cell, 0) + 1

    main_effects: dict[str, dict[object, float]] = {}
    variation: dict[object, float] = {}
    for i, f in enumerate(factors):
        effects = {}
        for level in f.levels:
            count = level_counts[i][level]
            if count == 0:
                raise AnovaError(f"unbalanced table: no runs at {f.name}={level!r}")
            effects[level] = level_sums[i][level] / count - mean
        main_effects[f.name] = effects
        runs_per_level = n // len(f.levels)
        variation[f.name] = runs_per_level * math.fsum(
            e * e for e in effects.values())

    interactions: dict[tuple[str, str], dict[tuple, float]] = {}
    for p in pairs:
        fa, fb = factors[p[0]], factors[p[1]]
        effects = {}
        for la, lb in product(fa.levels, fb.levels):
            cell = (la, lb)
            count = pair_counts[p].get(cell, 0)
            if count == 0:
                raise AnovaError(
                    f"unbalanced table: no runs at {fa.name}={la!r}, {fb.name}={lb!r}")
            cell_mean = pair_sums[p][cell] / count
            effects[cell] = (cell_mean - mean
                             - main_effects[fa.name][la]
                             - main_effects[fb.name][lb])
        interactions[(fa.name, fb.name)] = effects
        runs_per_cell = n // (len(fa.levels) * len(fb.levels))
        variation[(fa.name, fb.name)] = runs_per_cell * math.fsum(
            e * e for e in effects.values())

    total = total_variation(table)
    residual = total - math.fsum(variation.values())
    return AnovaReport(response=response, num_runs=n, overall_mean=mean,
                       total_variation=total, main_effects=main_effects,
                       interactions=interactions, variation=variation,
                       residual_variation=residual)


def term_label(term) -> str:
    if isinstance(term, tuple):
        return f"{term[0]} * {term[1]}"
    return str(term)


def report_lines(report: AnovaReport) -> list[str]:
    """Human-readable allocation table, largest contributors first."""
    lines = [
        f"response: {report.response}",
        f"runs: {report.num_runs}",
        f"overall mean: {report.overall_mean:.6g}",
        f"total variation: {report.total_variation:.6g}",
        "",
        f"{'factor/interaction':<40} {'allocation %':>12}",
    ]
    for term, pct in report.ranked_terms():
        lines.append(f"{term_label(term):<40} {pct:>12.2f}")
    lines.append(f"{'residual (higher-order)':<40} {report.residual_pct():>12.2f}")
    return lines
