"""Per-snapshot species census as a time series, with insertion events marked."""

from __future__ import annotations

from dataclasses import dataclass, field

from aloxbench.analysis.census import CensusCriteria, SpeciesCensus, species_census
from aloxbench.analysis.tables import write_table
from aloxbench.units import UNITS

COLUMNS = ["time_fs", "n_O2_gas", "n_O_bound", "n_Al_particle", "n_Al_vapor", "n_Al_oxidized",
           "n_O_total", "n_Al_total", "o2_consumed", "replenish_event"]


@dataclass(eq=False)
class KineticsTable:
    rows: list[SpeciesCensus]
    criteria: CensusCriteria
    events: list[tuple[float, int]] = field(default_factory=list)  # (time, O atoms added)

    def o2_consumed(self) -> list[float]:
        """Cumulative O2 taken up since the first frame: half the growth of bound O."""
        if not self.rows:
            return []
        base = self.rows[0].n_O_bound
        return [(r.n_O_bound - base) / 2.0 for r in self.rows]

    def write(self, path) -> None:
        event_times = {t for t, _ in self.events}
        consumed = self.o2_consumed()
        rows = [
            [r.time, r.n_O2_gas, r.n_O_bound, r.n_Al_particle, r.n_Al_vapor, r.n_Al_oxidized,
             r.n_O_total, r.n_Al_total, consumed[k], int(r.time in event_times)]
            for k, r in enumerate(self.rows)
        ]
        header = {"units": UNITS.header(), "criteria_angstrom": self.criteria.to_dict()}
        write_table(path, COLUMNS, rows, header)


def kinetics_series(trajectory, criteria: CensusCriteria = CensusCriteria()) -> KineticsTable:
    rows = [species_census(fr, criteria) for fr in trajectory]
    events = []
    for prev, cur in zip(rows, rows[1:]):
        if cur.n_O_total > prev.n_O_total:
            events.append((cur.time, cur.n_O_total - prev.n_O_total))
    return KineticsTable(rows, criteria, events)
