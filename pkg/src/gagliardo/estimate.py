"""The result record shared by every integral computation."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field


@dataclass(frozen=True)
class Estimate:
    """A numerical value with its refinement history.

    ``refinement_trace[i]`` is the value obtained on the cubes of levels up
    to ``depths[i]``.  ``error`` is an a-posteriori indicator (the change
    over the last refinement step for deterministic quadrature), ``stderr``
    is only populated by Monte Carlo paths.
    """

    value: float
    refinement_trace: tuple = ()
    divergent: bool = False
    stderr: float = 0.0
    error: float = 0.0
    depths: tuple = ()
    diagnostic: str = ""
    extra: dict = field(default_factory=dict, compare=False)

    @property
    def finite(self) -> bool:
        return not self.divergent and math.isfinite(self.value)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["refinement_trace"] = list(self.refinement_trace)
        d["depths"] = list(self.depths)
        return d
