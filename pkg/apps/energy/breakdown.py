from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Dict, Tuple

CSV_COLUMNS = (
    "step",
    "E_main",
    "E_bulk",
    "E_anchor",
    "E_electric",
    "E_total",
    "ds_norm",
    "min_s",
    "tangent_norm",
)


@dataclass(frozen=True)
class EnergyBreakdown:
    """Parts of a discrete energy.

    ``surface`` is the boundary anchoring of the standard model and stays 0
    for the constrained models. ``offset`` is the constant part contained in
    ``bulk`` (K |Omega| / eta_B for the standard potential).
    """

    main: float
    bulk: float
    anchoring: float = 0.0
    electric: float = 0.0
    surface: float = 0.0
    residual: float = 0.0
    offset: float = 0.0
    warnings: Tuple[str, ...] = ()

    @property
    def total(self) -> float:
        return self.main + self.bulk + self.anchoring + self.electric + self.surface

    @property
    def total_without_offset(self) -> float:
        return self.total - self.offset

    def as_dict(self) -> Dict[str, object]:
        data = asdict(self)
        data["warnings"] = list(self.warnings)
        data["total"] = self.total
        data["total_without_offset"] = self.total_without_offset
        return data
