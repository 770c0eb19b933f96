"""
The affine alcove: facets as subsets of the simple affine roots, the
invariants l(F) and ell, and the admissible weight sets P_c and P_c^F.

A facet is recorded only through S(F), the set of simple affine roots that do
not vanish on it; index 0 is alpha_0 = 1 - theta. The Iwahori alcove is S(F) = S
and a vertex has |S(F)| = 1.
"""

import itertools
import math
from dataclasses import dataclass, field
from functools import lru_cache, reduce
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from liealg import ReflectionSubgroup, RootDatum, Weight, reflection_subgroup
from logger_config import logger
from utils import EQUATION_TAGS, ValidationError, _is_int


@dataclass(frozen=True, order=True)
class Facet:
    nonvanishing: Tuple[int, ...]

    def __post_init__(self):
        indices = tuple(sorted(set(int(i) for i in self.nonvanishing)))
        if not indices:
            raise ValidationError("a facet needs at least one nonvanishing simple affine root")
        if indices[0] < 0:
            raise ValidationError(f"negative affine node index in facet {list(indices)}")
        object.__setattr__(self, "nonvanishing", indices)

    @classmethod
    def iwahori(cls, rank: int) -> "Facet":
        return cls(tuple(range(rank + 1)))

    @classmethod
    def vertex(cls, index: int) -> "Facet":
        return cls((index,))

    @classmethod
    def from_json(cls, data) -> "Facet":
        if not isinstance(data, list) or not all(_is_int(i) for i in data):
            raise ValidationError(f"facet must be an array of integers, got {data!r}")
        if len(set(data)) != len(data):
            raise ValidationError(f"facet {data} repeats a node")
        return cls(tuple(data))

    @property
    def dimension(self) -> int:
        return len(self.nonvanishing) - 1

    @property
    def is_vertex(self) -> bool:
        return len(self.nonvanishing) == 1

    @property
    def contains_affine_node(self) -> bool:
        return 0 in self.nonvanishing

    @property
    def finite_support(self) -> Tuple[int, ...]:
        """S(F) without alpha_0: the coordinates an admissible weight may use."""
        return tuple(i for i in self.nonvanishing if i != 0)

    def is_iwahori(self, rank: int) -> bool:
        return self.nonvanishing == tuple(range(rank + 1))

    def vanishing(self, rank: int) -> Tuple[int, ...]:
        return tuple(i for i in range(rank + 1) if i not in self.nonvanishing)

    def to_list(self) -> List[int]:
        return list(self.nonvanishing)

    def __str__(self):
        return "{" + ", ".join(str(i) for i in self.nonvanishing) + "}"


@dataclass(frozen=True)
class MarkedPoint:
    label: str
    facet: Facet


@dataclass(frozen=True)
class ParahoricDatum:
    """A marked curve of genus g with a facet at every marked point, at level c."""
    datum: RootDatum
    genus: int = 0
    points: Tuple[MarkedPoint, ...] = field(default_factory=tuple)
    level: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "points", tuple(self.points))
        if not _is_int(self.genus) or self.genus < 0:
            raise ValidationError(f"genus must be a nonnegative integer, got {self.genus!r}")
        if self.level is not None and (not _is_int(self.level) or self.level < 0):
            raise ValidationError(f"level must be a nonnegative integer, got {self.level!r}")
        seen = set()
        for point in self.points:
            if point.label in seen:
                raise ValidationError(f"duplicate point label {point.label!r}")
            seen.add(point.label)
            validate_facet(self.datum, point.facet)

    @property
    def labels(self) -> Tuple[str, ...]:
        return tuple(p.label for p in self.points)

    def facet_of(self, label: str) -> Facet:
        for point in self.points:
            if point.label == label:
                return point.facet
        raise ValidationError(f"unknown point label {label!r}")

    def with_point(self, label: str, facet: Facet) -> "ParahoricDatum":
        return ParahoricDatum(self.datum, self.genus, self.points + (MarkedPoint(label, facet),), self.level)

    def with_facet(self, label: str, facet: Facet) -> "ParahoricDatum":
        self.facet_of(label)
        points = tuple(MarkedPoint(p.label, facet) if p.label == label else p for p in self.points)
        return ParahoricDatum(self.datum, self.genus, points, self.level)

    def without_point(self, label: str) -> "ParahoricDatum":
        self.facet_of(label)
        return ParahoricDatum(self.datum, self.genus,
                              tuple(p for p in self.points if p.label != label), self.level)

    def require_level(self) -> int:
        if self.level is None:
            raise ValidationError("this computation needs a level")
        return self.level

    @classmethod
    def from_json(cls, datum: RootDatum, points: Iterable[dict], genus: int = 0,
                  level: Optional[int] = None) -> "ParahoricDatum":
        marked = tuple(MarkedPoint(str(p["label"]), Facet.from_json(p["facet"])) for p in points)
        return cls(datum, genus, marked, level)


def validate_facet(datum: RootDatum, facet: Facet) -> Facet:
    if facet.nonvanishing[-1] > datum.rank:
        raise ValidationError(
            f"facet {facet.to_list()} uses node {facet.nonvanishing[-1]}, but {datum.name} has nodes 0..{datum.rank}"
        )
    return facet


def l_of_facet(datum: RootDatum, facet: Facet) -> int:
    """gcd of the comarks over S(F), alpha_0 counting with comark 1."""
    validate_facet(datum, facet)
    comarks = datum.affine_comarks
    return reduce(math.gcd, (comarks[i] for i in facet.nonvanishing))


def ell_of_datum(parahoric: ParahoricDatum) -> int:
    """lcm of l(F_x) over the marked points."""
    if not parahoric.points:
        raise ValidationError("ell is defined only for a nonempty set of marked points")
    ell = reduce(math.lcm, (l_of_facet(parahoric.datum, p.facet) for p in parahoric.points))
    logger.log_quantity("ell", ell, EQUATION_TAGS["ell"])
    return ell


def _bounded_solutions(weights: Sequence[int], bound: int) -> Iterable[Tuple[int, ...]]:
    """Nonnegative n with sum n_i weights_i <= bound, lexicographic."""
    ranges = [range(bound // w + 1) for w in weights]
    for n in itertools.product(*ranges):
        if sum(a * w for a, w in zip(n, weights)) <= bound:
            yield n


def enumerate_P_c(datum: RootDatum, c: int) -> List[Weight]:
    """Dominant weights with lambda(theta^vee) <= c, lexicographic."""
    if not _is_int(c) or c < 0:
        raise ValidationError(f"level must be a nonnegative integer, got {c!r}")
    return list(_P_c(datum, c))


@lru_cache(maxsize=None)
def _P_c(datum: RootDatum, c: int) -> Tuple[Weight, ...]:
    return tuple(Weight(n) for n in _bounded_solutions(datum.comarks, c))


def enumerate_P_c_F(datum: RootDatum, c: int, facet: Facet) -> List[Weight]:
    """Weights sum_{alpha in S(F), alpha != 0} n_alpha omega_alpha admissible at level c for the facet.

    With alpha_0 in S(F) its coefficient is a slack n_0 = c - sum n_alpha a_alpha^vee >= 0;
    otherwise the level is met exactly.
    """
    if not _is_int(c) or c < 0:
        raise ValidationError(f"level must be a nonnegative integer, got {c!r}")
    local = l_of_facet(datum, facet)
    if c % local:
        raise ValidationError(f"level {c} is not a multiple of l(F) = {local} for facet {facet.to_list()}")
    return list(_P_c_F(datum, c, facet))


@lru_cache(maxsize=None)
def _P_c_F(datum: RootDatum, c: int, facet: Facet) -> Tuple[Weight, ...]:
    support = facet.finite_support
    comarks = [datum.comarks[i - 1] for i in support]
    result = []
    for n in _bounded_solutions(comarks, c):
        total = sum(a * w for a, w in zip(n, comarks))
        if not facet.contains_affine_node and total != c:
            continue
        coords = [0] * datum.rank
        for index, value in zip(support, n):
            coords[index - 1] = value
        result.append(Weight(coords))
    return tuple(sorted(result))


def levi_weyl(datum: RootDatum, facet: Facet) -> ReflectionSubgroup:
    """Weyl group of the Levi at the facet: simple reflections of S minus S(F), node 0 giving s_theta."""
    validate_facet(datum, facet)
    return _levi_weyl(datum, facet)


@lru_cache(maxsize=None)
def _levi_weyl(datum: RootDatum, facet: Facet) -> ReflectionSubgroup:
    simple = []
    labels = facet.vanishing(datum.rank)
    for index in labels:
        if index == 0:
            simple.append(tuple(-m for m in datum.marks))
        else:
            simple.append(tuple(1 if k == index - 1 else 0 for k in range(datum.rank)))
    return reflection_subgroup(datum, simple, labels)


def enumerate_facets(datum: RootDatum) -> List[Facet]:
    """All 2^(rank+1) - 1 facets of the closed alcove, by dimension then lexicographically."""
    nodes = range(datum.rank + 1)
    return [Facet(subset)
            for size in range(1, datum.rank + 2)
            for subset in itertools.combinations(nodes, size)]


def is_special_by_mark(datum: RootDatum, facet: Facet) -> bool:
    validate_facet(datum, facet)
    return facet.is_vertex and datum.affine_marks[facet.nonvanishing[0]] == 1


def is_special_by_comark(datum: RootDatum, facet: Facet) -> bool:
    validate_facet(datum, facet)
    return facet.is_vertex and datum.affine_comarks[facet.nonvanishing[0]] == 1


def character_rank(datum: RootDatum, facet: Facet) -> int:
    """Rank of the character group of the Levi at the facet."""
    return datum.rank - levi_weyl(datum, facet).rank


def facet_summary(datum: RootDatum, facet: Facet) -> Dict[str, object]:
    levi = levi_weyl(datum, facet)
    return {
        "facet": facet.to_list(),
        "dimension": facet.dimension,
        "l_of_facet": l_of_facet(datum, facet),
        "levi_nodes": list(levi.labels),
        "levi_positive_roots": len(levi.positive_roots),
        "character_rank": character_rank(datum, facet),
        "special_by_mark": is_special_by_mark(datum, facet),
        "special_by_comark": is_special_by_comark(datum, facet),
    }
