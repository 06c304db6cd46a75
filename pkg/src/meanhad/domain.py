"""Rectangle-union domains with piecewise-constant weights.

A domain is an ordered list of axis-aligned rectangles laid side by side
along x1, each carrying the constant value of the weight ``f`` on it, plus a
rule telling the mesher which boundary nodes are clamped.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, asdict
from typing import Mapping, Optional

ALL_DIRICHLET = "all_dirichlet"
DIRICHLET_EXCEPT_RIGHT_EDGE = "dirichlet_except_right_edge"
DIRICHLET_ON_X1_NONPOSITIVE = "dirichlet_on_x1_nonpositive"

BC_KINDS = (ALL_DIRICHLET, DIRICHLET_EXCEPT_RIGHT_EDGE, DIRICHLET_ON_X1_NONPOSITIVE)
PRESETS = ("canonical", "half", "thin", "neumann")


class DomainError(ValueError):
    """Invalid preset name, parameter or geometry."""


@dataclass(frozen=True)
class RectRegion:
    x_lo: float
    x_hi: float
    y_lo: float
    y_hi: float
    weight: float
    label: str = ""

    def __post_init__(self):
        if not (self.x_lo < self.x_hi and self.y_lo < self.y_hi):
            raise DomainError(f"degenerate rectangle {self.label!r}: "
                              f"({self.x_lo},{self.x_hi})x({self.y_lo},{self.y_hi})")
        if not math.isfinite(self.weight):
            raise DomainError(f"non-finite weight on region {self.label!r}")

    @property
    def width(self) -> float:
        return self.x_hi - self.x_lo

    @property
    def height(self) -> float:
        return self.y_hi - self.y_lo

    @property
    def area(self) -> float:
        return self.width * self.height


@dataclass(frozen=True)
class BCRule:
    kind: str = ALL_DIRICHLET
    threshold: Optional[float] = None

    def __post_init__(self):
        if self.kind not in BC_KINDS:
            raise DomainError(f"unknown boundary rule {self.kind!r}")
        needs = self.kind == DIRICHLET_ON_X1_NONPOSITIVE
        if needs != (self.threshold is not None):
            raise DomainError("threshold must be given iff kind is "
                              f"{DIRICHLET_ON_X1_NONPOSITIVE!r}")


@dataclass(frozen=True)
class DomainSpec:
    regions: tuple[RectRegion, ...]
    bc_rule: BCRule = field(default_factory=BCRule)
    preset_name: str = "custom"
    parameters: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "regions", tuple(self.regions))
        object.__setattr__(self, "parameters", dict(self.parameters))
        if not self.regions:
            raise DomainError("a domain needs at least one region")
        check_vertical_tiling(self.regions)

    @property
    def bounds(self) -> tuple[float, float, float, float]:
        """(x_lo, x_hi, y_lo, y_hi) of the enclosing rectangle."""
        r = self.regions
        return r[0].x_lo, r[-1].x_hi, r[0].y_lo, r[0].y_hi

    @property
    def area(self) -> float:
        return sum(r.area for r in self.regions)

    @property
    def weights(self) -> tuple[float, ...]:
        return tuple(r.weight for r in self.regions)

    def interfaces(self) -> list[float]:
        """x1-coordinates of the interior vertical region interfaces."""
        return [r.x_hi for r in self.regions[:-1]]

    def with_weights(self, weights) -> "DomainSpec":
        """Copy of this domain with the region weights replaced."""
        weights = list(weights)
        if len(weights) != len(self.regions):
            raise DomainError("need one weight per region")
        regions = [RectRegion(r.x_lo, r.x_hi, r.y_lo, r.y_hi, float(w), r.label)
                   for r, w in zip(self.regions, weights)]
        return DomainSpec(regions, self.bc_rule, self.preset_name, self.parameters)

    def to_dict(self) -> dict:
        return {
            "preset": self.preset_name,
            "parameters": dict(self.parameters),
            "regions": [asdict(r) for r in self.regions],
            "bc_rule": asdict(self.bc_rule),
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "DomainSpec":
        return cls(
            regions=tuple(RectRegion(**r) for r in data["regions"]),
            bc_rule=BCRule(**data["bc_rule"]),
            preset_name=data.get("preset", "custom"),
            parameters=data.get("parameters", {}),
        )


def check_vertical_tiling(regions) -> None:
    """Raise unless the regions tile one rectangle, ordered left to right."""
    y_lo, y_hi = regions[0].y_lo, regions[0].y_hi
    for left, right in zip(regions, regions[1:]):
        if left.x_hi != right.x_lo:
            raise DomainError(f"regions {left.label!r} and {right.label!r} "
                              "are not adjacent along x1")
    for r in regions:
        if r.y_lo != y_lo or r.y_hi != y_hi:
            raise DomainError(f"region {r.label!r} does not span the full height")


def _require(params, *names):
    missing = [n for n in names if n not in params]
    if missing:
        raise DomainError(f"missing parameter(s): {', '.join(missing)}")
    for n in names:
        if not math.isfinite(float(params[n])):
            raise DomainError(f"parameter {n} must be finite")


def thin_delta(params: Mapping[str, float]) -> float:
    """Strip width for the thin preset: ``delta`` if given, else 1/(2k)."""
    if "delta" in params:
        delta = float(params["delta"])
    elif "k" in params:
        k = params["k"]
        if int(k) != k or k < 1:
            raise DomainError(f"k must be a positive integer, got {k}")
        delta = 1.0 / (2 * int(k))
    else:
        raise DomainError("thin preset needs k or delta")
    if not delta > 0:
        raise DomainError(f"delta must be positive, got {delta}")
    return delta


def build_preset(name: str, params: Optional[Mapping[str, float]] = None) -> DomainSpec:
    """Return the geometry, weights and boundary rule of a named preset.

    ``canonical`` (c)
        Four 1/2 x 1 rectangles on (-1, 1) x (-1/2, 1/2) with weights
        (-c, 0, 0, c), clamped on the whole boundary.
    ``half`` (M)
        (-1, -1/2) with weight -M next to (-1/2, 0) with weight 0; the
        right edge x1 = 0 is free.
    ``thin`` (M, and k or delta)
        As ``half`` but the zero-weight strip is (-1/2, -1/2 + delta),
        delta = 1/(2k). M defaults to 1 so that the result can serve as the
        unit-coefficient operand of a bisection.
    ``neumann`` (c, delta >= 0)
        (-1, 0) with weight c, followed by (0, delta) with weight 0;
        clamped on {x1 <= 0}. For delta = 0 only the first rectangle
        remains and its right edge is free.
    """
    params = dict(params or {})
    half_h = 0.5
    if name == "canonical":
        _require(params, "c")
        c = float(params["c"])
        regions = [
            RectRegion(-1.0, -0.5, -half_h, half_h, 0.0 - c, "R_-2"),
            RectRegion(-0.5, 0.0, -half_h, half_h, 0.0, "R_-1"),
            RectRegion(0.0, 0.5, -half_h, half_h, 0.0, "R_1"),
            RectRegion(0.5, 1.0, -half_h, half_h, c, "R_2"),
        ]
        rule = BCRule(ALL_DIRICHLET)
    elif name == "half":
        _require(params, "M")
        M = float(params["M"])
        regions = [
            RectRegion(-1.0, -0.5, -half_h, half_h, 0.0 - M, "R_-2"),
            RectRegion(-0.5, 0.0, -half_h, half_h, 0.0, "R_-1"),
        ]
        rule = BCRule(DIRICHLET_EXCEPT_RIGHT_EDGE)
    elif name == "thin":
        M = float(params.setdefault("M", 1.0))
        delta = thin_delta(params)
        params["delta"] = delta
        regions = [
            RectRegion(-1.0, -0.5, -half_h, half_h, 0.0 - M, "R_-2"),
            RectRegion(-0.5, -0.5 + delta, -half_h, half_h, 0.0, "R^delta"),
        ]
        rule = BCRule(DIRICHLET_EXCEPT_RIGHT_EDGE)
    elif name == "neumann":
        _require(params, "c", "delta")
        c, delta = float(params["c"]), float(params["delta"])
        if delta < 0:
            raise DomainError(f"delta must be nonnegative, got {delta}")
        regions = [RectRegion(-1.0, 0.0, -half_h, half_h, c, "R_-")]
        if delta > 0:
            regions.append(RectRegion(0.0, delta, -half_h, half_h, 0.0, "R^delta"))
            rule = BCRule(DIRICHLET_ON_X1_NONPOSITIVE, threshold=0.0)
        else:
            rule = BCRule(DIRICHLET_EXCEPT_RIGHT_EDGE)
    else:
        raise DomainError(f"unknown preset {name!r}; expected one of {PRESETS}")
    params = {k: float(v) for k, v in params.items()}
    return DomainSpec(tuple(regions), rule, name, params)


def reflect_x1(domain: DomainSpec) -> DomainSpec:
    """Mirror a domain across x1 = 0 (region order reversed)."""
    regions = [RectRegion(-r.x_hi, -r.x_lo, r.y_lo, r.y_hi, r.weight, r.label)
               for r in reversed(domain.regions)]
    return DomainSpec(tuple(regions), domain.bc_rule, domain.preset_name,
                      domain.parameters)
