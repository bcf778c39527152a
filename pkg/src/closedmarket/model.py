"""Domain types for the closed-market engine.

An economy couples a linear production sector (labor classes with fixed
per-epoch supplies, a technology matrix of labor requirements per unit of
good) with a budget-driven consumption market over the produced goods.
Every type here is immutable after construction and safe to share across
threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

__all__ = [
    "ValidationError",
    "DimensionMismatch",
    "ZeroUtilityRowOrColumn",
    "NonPositiveSupply",
    "EmptyTechnologyColumn",
    "Economy",
    "EquilibriumPoint",
    "CombinatorialData",
    "ParameterBinding",
    "ParametricFamily",
    "validate_economy",
    "normalize_point",
]


class ValidationError(ValueError):
    """An economy specification violates a structural assumption.

    Carries the full list of violations as ``(code, message)`` pairs so a
    caller can report everything at once.
    """

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(msg for _, msg in self.violations) or "invalid economy")


class DimensionMismatch(ValidationError):
    pass


class ZeroUtilityRowOrColumn(ValidationError):
    pass


class NonPositiveSupply(ValidationError):
    pass


class EmptyTechnologyColumn(ValidationError):
    pass


def _frozen(a, dtype=float) -> np.ndarray:
    arr = np.array(a, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Economy:
    """A validated market specification.

    ``technology[i, j]`` is the labor of class i needed per unit of good j,
    ``utility[i, j]`` the posted happiness per unit, and ``true_utility``
    the matrix used to score outcomes (defaults to the posted one).
    """

    class_names: tuple[str, ...]
    labor_supply: np.ndarray        # shape (m,), all > 0
    good_names: tuple[str, ...]
    technology: np.ndarray          # shape (m, n), >= 0
    utility: np.ndarray             # shape (m, n), >= 0
    true_utility: np.ndarray        # shape (m, n), >= 0

    @property
    def m(self) -> int:
        return len(self.class_names)

    @property
    def n(self) -> int:
        return len(self.good_names)

    def with_utility(self, utility) -> "Economy":
        """Same economy with a different posted utility matrix (revalidated)."""
        return validate_economy(replace(self, utility=_frozen(utility)))

    def with_labor(self, supply) -> "Economy":
        return validate_economy(replace(self, labor_supply=_frozen(supply)))

    def with_technology(self, technology) -> "Economy":
        return validate_economy(replace(self, technology=_frozen(technology)))

    def to_dict(self) -> dict:
        d = {
            "labor_classes": [
                {"name": name, "supply": float(s)}
                for name, s in zip(self.class_names, self.labor_supply)
            ],
            "goods": [{"name": name} for name in self.good_names],
            "technology": self.technology.tolist(),
            "utility": self.utility.tolist(),
        }
        if not np.array_equal(self.true_utility, self.utility):
            d["true_utility"] = self.true_utility.tolist()
        return d


def economy(class_names, labor_supply, good_names, technology, utility,
            true_utility=None) -> Economy:
    """Build and validate an Economy from raw arrays."""
    u = _frozen(utility)
    ut = u if true_utility is None else _frozen(true_utility)
    return validate_economy(Economy(
        class_names=tuple(str(c) for c in class_names),
        labor_supply=_frozen(labor_supply),
        good_names=tuple(str(g) for g in good_names),
        technology=_frozen(technology),
        utility=u,
        true_utility=ut,
    ))


def _violations(econ: Economy) -> list[tuple[str, str]]:
    out = []
    m, n = econ.m, econ.n
    if m < 1 or n < 1:
        out.append(("dimension", "need at least one labor class and one good"))
        return out
    for name, arr, shape in (
        ("labor_supply", econ.labor_supply, (m,)),
        ("technology", econ.technology, (m, n)),
        ("utility", econ.utility, (m, n)),
        ("true_utility", econ.true_utility, (m, n)),
    ):
        if arr.shape != shape:
            out.append(("dimension", f"{name} has shape {arr.shape}, expected {shape}"))
    if out:
        return out
    if not np.all(np.isfinite(econ.technology)) or np.any(econ.technology < 0):
        out.append(("technology", "technology entries must be finite and >= 0"))
    if not np.all(np.isfinite(econ.utility)) or np.any(econ.utility < 0):
        out.append(("utility", "utility entries must be finite and >= 0"))
    if not np.all(np.isfinite(econ.true_utility)) or np.any(econ.true_utility < 0):
        out.append(("utility", "true_utility entries must be finite and >= 0"))
    for i in np.nonzero(econ.labor_supply <= 0)[0]:
        out.append(("supply", f"labor class {econ.class_names[i]!r} has non-positive supply"))
    for j in np.nonzero(~np.any(econ.technology > 0, axis=0))[0]:
        out.append(("tech_column", f"good {econ.good_names[j]!r} needs no labor at all"))
    for i in np.nonzero(~np.any(econ.utility > 0, axis=1))[0]:
        out.append(("utility_row", f"class {econ.class_names[i]!r} values no good"))
    for j in np.nonzero(~np.any(econ.utility > 0, axis=0))[0]:
        out.append(("utility_col", f"good {econ.good_names[j]!r} is valued by no class"))
    return out


_ERROR_BY_CODE = {
    "dimension": DimensionMismatch,
    "supply": NonPositiveSupply,
    "tech_column": EmptyTechnologyColumn,
    "utility_row": ZeroUtilityRowOrColumn,
    "utility_col": ZeroUtilityRowOrColumn,
}


def validate_economy(spec) -> Economy:
    """Validate an economy spec; idempotent on already-valid Economy objects.

    Accepts an Economy or a dict in the scenario-file schema. Raises a
    ValidationError subclass matching the first violation found; the
    exception carries the full violation list.
    """
    if isinstance(spec, Economy):
        econ = spec
    elif isinstance(spec, dict):
        econ = _economy_from_dict(spec)
    else:
        raise TypeError(f"cannot validate {type(spec).__name__} as an economy")
    bad = _violations(econ)
    if bad:
        raise _ERROR_BY_CODE.get(bad[0][0], ValidationError)(bad)
    return econ


def _economy_from_dict(d: dict) -> Economy:
    missing = [k for k in ("labor_classes", "goods", "technology", "utility") if k not in d]
    if missing:
        raise DimensionMismatch([("dimension", f"missing field {k!r}") for k in missing])
    classes = d["labor_classes"]
    u = _frozen(d["utility"])
    return Economy(
        class_names=tuple(str(c["name"]) for c in classes),
        labor_supply=_frozen([c["supply"] for c in classes]),
        good_names=tuple(str(g["name"]) for g in d["goods"]),
        technology=_frozen(d["technology"]),
        utility=u,
        true_utility=_frozen(d["true_utility"]) if "true_utility" in d else u,
    )


@dataclass(frozen=True)
class EquilibriumPoint:
    """A candidate or verified market state (prices, quantities, wages, allocation).

    ``bang_per_buck[i]`` is max_j utility[i, j] / prices[j] for classes with a
    positive budget and 0 otherwise.
    """

    prices: np.ndarray        # (n,)
    quantities: np.ndarray    # (n,)
    wages: np.ndarray         # (m,) per-person wage
    allocation: np.ndarray    # (m, n)
    bang_per_buck: np.ndarray  # (m,)

    @classmethod
    def from_parts(cls, econ: Economy, prices, quantities, wages, allocation) -> "EquilibriumPoint":
        """Assemble a point, deriving bang-per-buck from the economy's posted utility."""
        p = _frozen(prices)
        q = _frozen(quantities)
        w = _frozen(wages)
        x = _frozen(allocation)
        if p.shape != (econ.n,) or q.shape != (econ.n,) or w.shape != (econ.m,) \
                or x.shape != (econ.m, econ.n):
            raise DimensionMismatch([("dimension", "point arrays do not match the economy")])
        bb = np.zeros(econ.m)
        funded = w * econ.labor_supply > 0
        priced = p > 0
        for i in np.nonzero(funded)[0]:
            ratios = econ.utility[i, priced] / p[priced]
            if ratios.size:
                bb[i] = ratios.max()
        return cls(p, q, w, x, _frozen(bb))

    def scaled(self, factor: float) -> "EquilibriumPoint":
        """Rescale the money unit: prices and wages multiply, quantities and
        allocations stay, bang-per-buck divides."""
        return EquilibriumPoint(
            _frozen(self.prices * factor),
            self.quantities,
            _frozen(self.wages * factor),
            self.allocation,
            _frozen(self.bang_per_buck / factor),
        )


def normalize_point(point: EquilibriumPoint, econ: Economy, mode: str = "revenue") -> EquilibriumPoint:
    """Pin the money scale of a point.

    ``revenue`` makes sum(p*q) = 1, ``money`` makes sum(w*Y) = 1, and
    ``numeraire:<j>`` makes p_j = 1 (j may be an index or a good name).
    """
    if mode == "revenue":
        denom = float(point.prices @ point.quantities)
    elif mode == "money":
        denom = float(point.wages @ econ.labor_supply)
    elif mode.startswith("numeraire"):
        tag = mode.split(":", 1)[1] if ":" in mode else "0"
        j = econ.good_names.index(tag) if tag in econ.good_names else int(tag)
        denom = float(point.prices[j])
    else:
        raise ValueError(f"unknown normalization {mode!r}")
    if denom <= 0:
        raise ValueError(f"cannot normalize: {mode} scale is {denom}")
    return point.scaled(1.0 / denom)


@dataclass(frozen=True)
class CombinatorialData:
    """The index sets that identify an equilibrium regime.

    ``active_classes`` are wage earners, ``active_goods`` the produced goods,
    ``forest`` the class-good pairs with positive allocation spend, and
    ``components`` the number of connected pieces of the forest over the
    active vertices.
    """

    active_classes: frozenset[int]
    active_goods: frozenset[int]
    forest: frozenset[tuple[int, int]]
    components: int
    bound_violated: bool = False
    tight_zero_edges: frozenset[tuple[int, int]] = frozenset()

    def canonical_label(self) -> str:
        # no commas: the label is used as a single CSV field
        i = ".".join(str(v) for v in sorted(self.active_classes))
        j = ".".join(str(v) for v in sorted(self.active_goods))
        f = ";".join(f"{a}-{b}" for a, b in sorted(self.forest))
        return f"I[{i}]|J[{j}]|F[{f}]"


@dataclass(frozen=True)
class ParameterBinding:
    name: str
    row: int
    col: int
    lo: float
    hi: float
    grid: tuple[float, ...] | None = None


@dataclass(frozen=True)
class ParametricFamily:
    """An economy whose posted utility matrix has named free cells."""

    base: Economy
    bindings: tuple[ParameterBinding, ...]

    def __post_init__(self):
        cells = [(b.row, b.col) for b in self.bindings]
        if len(set(cells)) != len(cells):
            raise ValidationError([("binding", "parameter bindings share a utility cell")])
        for b in self.bindings:
            if not (0 <= b.row < self.base.m and 0 <= b.col < self.base.n):
                raise DimensionMismatch(
                    [("dimension", f"parameter {b.name!r} binds cell outside the utility matrix")])

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(b.name for b in self.bindings)

    @property
    def players(self) -> tuple[int, ...]:
        """Class index that owns each parameter (the bound row)."""
        return tuple(b.row for b in self.bindings)

    def instantiate(self, **values) -> Economy:
        unknown = set(values) - set(self.names)
        if unknown:
            raise KeyError(f"unknown parameters {sorted(unknown)}")
        u = np.array(self.base.utility)
        for b in self.bindings:
            if b.name in values:
                u[b.row, b.col] = float(values[b.name])
        return self.base.with_utility(u)
