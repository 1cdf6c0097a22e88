"""Learning-period values with units: absolute, multiples of n, or of n ln n."""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

from .errors import InvalidConfiguration

_PATTERN = re.compile(r"^\s*([0-9]*\.?[0-9]+(?:[eE][-+]?[0-9]+)?)?\s*(nlnn|n|)\s*$")


@dataclass(frozen=True)
class TauSpec:
    """A learning period as written by the user, resolved per problem size.

    ``unit`` is "" (absolute evaluations), "n", "nlnn" or "omega". The last
    stands for any learning period growing faster than n and is only
    meaningful to the theory calculators.
    """

    value: float
    unit: str
    raw: str

    @classmethod
    def parse(cls, text: str | float | int) -> TauSpec:
        raw = str(text).strip()
        if raw.lower() in {"omega", "inf", "w"}:
            return cls(math.inf, "omega", raw)
        m = _PATTERN.match(raw.lower().replace("*", "").replace(" ", ""))
        if not m or (m.group(1) is None and not m.group(2)):
            raise InvalidConfiguration(f"cannot parse learning period {raw!r}")
        value = float(m.group(1)) if m.group(1) is not None else 1.0
        if value <= 0:
            raise InvalidConfiguration(f"learning period must be positive, got {raw!r}")
        return cls(value, m.group(2), raw)

    @property
    def is_omega(self) -> bool:
        return self.unit == "omega"

    def over_n(self, n: int | None = None) -> float:
        """Learning period divided by n, the unit the theory bounds use."""
        if self.is_omega:
            return math.inf
        if self.unit == "n":
            return self.value
        if n is None:
            raise InvalidConfiguration(f"learning period {self.raw!r} needs a problem size")
        if self.unit == "nlnn":
            return self.value * math.log(n)
        return self.value / n

    def resolve(self, n: int) -> int:
        """Integer learning period for problem size n, rounded up."""
        if self.is_omega:
            raise InvalidConfiguration("an asymptotic learning period cannot be simulated")
        if self.unit == "n":
            exact = self.value * n
        elif self.unit == "nlnn":
            exact = self.value * n * math.log(n)
        else:
            exact = self.value
        # guard against 10n -> 10000.000000000002
        return max(1, math.ceil(round(exact, 9)))


def tau_range(text: str) -> list[TauSpec]:
    """Expand "start:stop:step<unit>" (inclusive) or a single value."""
    parts = text.split(":")
    if len(parts) == 1:
        return [TauSpec.parse(text)]
    if len(parts) != 3:
        raise InvalidConfiguration(f"range must be start:stop:step, got {text!r}")
    unit_match = re.search(r"(nlnn|n)\s*$", parts[2].strip().lower())
    unit = unit_match.group(1) if unit_match else ""

    def number(p: str) -> float:
        p = p.strip().lower()
        if unit and p.endswith(unit):
            p = p[: -len(unit)]
        try:
            return float(p)
        except ValueError as exc:
            raise InvalidConfiguration(f"bad number {p!r} in range {text!r}") from exc

    start, stop, step = (number(p) for p in parts)
    if step <= 0:
        raise InvalidConfiguration(f"range step must be positive in {text!r}")
    count = int(math.floor((stop - start) / step + 1e-9)) + 1
    values = [round(start + j * step, 12) for j in range(max(count, 0))]
    return [TauSpec.parse(f"{v:g}{unit}") for v in values]
