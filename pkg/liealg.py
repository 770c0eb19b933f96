"""
Exact root-system, Weyl-group and finite-dimensional representation
arithmetic for the simple types A-G.

Node numbering is Bourbaki's for every type:

    A_n   1 - 2 - ... - n
    B_n   1 - ... - (n-1) => n         alpha_n short
    C_n   1 - ... - (n-1) <= n         alpha_n long
    D_n   1 - ... - (n-2) - {n-1, n}
    E_n   1 - 3 - 4 - ... - n, node 2 attached to node 4
    F_4   1 - 2 => 3 - 4               alpha_1, alpha_2 long
    G_2   1 <= 2                       alpha_1 short

Affine node 0 carries alpha_0 = 1 - theta. Weights are integer vectors in the
fundamental-weight basis and cartan[i][j] = <alpha_i, alpha_j^vee>, so row i
of the Cartan matrix is alpha_i written in that basis. Long roots have squared
length 2.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from functools import cached_property, lru_cache
from typing import Dict, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np
import sympy

from logger_config import logger
from utils import EQUATION_TAGS, ValidationError, format_weight

IntVector = Tuple[int, ...]

VALID_RANKS = {
    "A": lambda n: n >= 1,
    "B": lambda n: n >= 2,
    "C": lambda n: n >= 2,
    "D": lambda n: n >= 4,
    "E": lambda n: n in (6, 7, 8),
    "F": lambda n: n == 4,
    "G": lambda n: n == 2,
}


class Singular(Enum):
    """Returned when a shifted weight lies on a reflecting wall."""
    WALL = "singular"

    def __str__(self):
        return self.value


SINGULAR = Singular.WALL


@dataclass(frozen=True, order=True)
class Weight:
    """Integral weight sum_alpha n_alpha omega_alpha, stored as (n_1, ..., n_rank)."""
    coords: IntVector

    def __post_init__(self):
        object.__setattr__(self, "coords", tuple(int(c) for c in self.coords))

    @classmethod
    def zero(cls, rank: int) -> "Weight":
        return cls((0,) * rank)

    @classmethod
    def fundamental(cls, rank: int, index: int) -> "Weight":
        """omega_index, 1-based Bourbaki index."""
        if not 1 <= index <= rank:
            raise ValidationError(f"fundamental weight index {index} outside 1..{rank}")
        return cls(tuple(1 if i == index else 0 for i in range(1, rank + 1)))

    @property
    def rank(self) -> int:
        return len(self.coords)

    def is_dominant(self) -> bool:
        return all(c >= 0 for c in self.coords)

    def is_zero(self) -> bool:
        return not any(self.coords)

    def __add__(self, other: "Weight") -> "Weight":
        return Weight(tuple(a + b for a, b in zip(self.coords, other.coords)))

    def __sub__(self, other: "Weight") -> "Weight":
        return Weight(tuple(a - b for a, b in zip(self.coords, other.coords)))

    def __neg__(self) -> "Weight":
        return Weight(tuple(-a for a in self.coords))

    def __mul__(self, factor: int) -> "Weight":
        return Weight(tuple(factor * a for a in self.coords))

    __rmul__ = __mul__

    def to_list(self) -> List[int]:
        return list(self.coords)

    def __str__(self):
        return format_weight(self.coords)


def _pair(vector: Sequence[int], covector: Sequence[int]) -> int:
    return sum(v * c for v, c in zip(vector, covector))


def _cartan_matrix(letter: str, rank: int) -> np.ndarray:
    cartan = 2 * np.eye(rank, dtype=np.int64)

    def bond(i: int, j: int, a_ij: int = -1, a_ji: int = -1):
        cartan[i - 1, j - 1] = a_ij
        cartan[j - 1, i - 1] = a_ji

    if letter in "ABC":
        for i in range(1, rank):
            bond(i, i + 1)
        if letter == "B":
            bond(rank - 1, rank, -2, -1)
        elif letter == "C":
            bond(rank - 1, rank, -1, -2)
    elif letter == "D":
        for i in range(1, rank - 1):
            bond(i, i + 1)
        bond(rank - 2, rank)
    elif letter == "E":
        bond(1, 3)
        for i in range(3, rank):
            bond(i, i + 1)
        bond(2, 4)
    elif letter == "F":
        bond(1, 2)
        bond(2, 3, -2, -1)
        bond(3, 4)
    elif letter == "G":
        bond(1, 2, -1, -3)
    return cartan


def _root_lengths(cartan: np.ndarray) -> Tuple[Fraction, ...]:
    """Squared lengths d_i of the simple roots, long roots normalized to 2."""
    rank = cartan.shape[0]
    lengths: List[Optional[Fraction]] = [None] * rank
    lengths[0] = Fraction(1)
    queue = deque([0])
    while queue:
        i = queue.popleft()
        for j in range(rank):
            if i != j and cartan[i, j] != 0 and lengths[j] is None:
                # cartan[i][j] d_j = cartan[j][i] d_i
                lengths[j] = lengths[i] * int(cartan[j, i]) / int(cartan[i, j])
                queue.append(j)
    if any(d is None for d in lengths):
        raise ValidationError("Dynkin diagram is not connected")
    scale = 2 / max(lengths)
    return tuple(d * scale for d in lengths)


def _positive_roots(cartan: Sequence[Sequence[int]]) -> List[IntVector]:
    """Positive roots in simple-root coordinates, ordered by height then coordinates.

    Uses root strings: the alpha_i-string through beta runs from beta - p alpha_i
    to beta + q alpha_i with p - q = <beta, alpha_i^vee>.
    """
    rank = len(cartan)
    if rank == 0:
        return []
    simple = [tuple(1 if k == i else 0 for k in range(rank)) for i in range(rank)]
    roots = set(simple)
    layer = list(simple)
    while layer:
        next_layer = []
        for beta in layer:
            for i in range(rank):
                pairing = sum(beta[j] * int(cartan[j][i]) for j in range(rank))
                p = 0
                while True:
                    lower = tuple(b - (p + 1) * (k == i) for k, b in enumerate(beta))
                    if lower in roots:
                        p += 1
                    else:
                        break
                if p - pairing > 0:
                    upper = tuple(b + (k == i) for k, b in enumerate(beta))
                    if upper not in roots:
                        roots.add(upper)
                        next_layer.append(upper)
        layer = next_layer
    return sorted(roots, key=lambda r: (sum(r), r))


@dataclass(frozen=True, eq=False)
class RootDatum:
    """Cartan data of one simple type, Bourbaki numbering."""
    type_letter: str
    rank: int
    cartan: Tuple[IntVector, ...]
    root_lengths: Tuple[Fraction, ...]
    positive_roots: Tuple[IntVector, ...]
    theta: Weight
    theta_covec: IntVector
    comarks: IntVector
    marks: IntVector
    w0_action: Tuple[Tuple[int, int], ...]
    _multiplicity_cache: Dict[Weight, Dict[Weight, int]] = field(
        default_factory=dict, repr=False, compare=False)

    def __eq__(self, other):
        return isinstance(other, RootDatum) and self.key == other.key

    def __hash__(self):
        return hash(self.key)

    @property
    def key(self) -> Tuple[str, int]:
        return (self.type_letter, self.rank)

    @property
    def name(self) -> str:
        return f"{self.type_letter}{self.rank}"

    @property
    def rho(self) -> Weight:
        return Weight((1,) * self.rank)

    @property
    def zero(self) -> Weight:
        return Weight.zero(self.rank)

    @cached_property
    def cartan_array(self) -> np.ndarray:
        return np.array(self.cartan, dtype=np.int64)

    @cached_property
    def inverse_cartan(self) -> Tuple[Tuple[Fraction, ...], ...]:
        inverse = sympy.Matrix(self.cartan).inv()
        return tuple(
            tuple(Fraction(int(sympy.fraction(x)[0]), int(sympy.fraction(x)[1])) for x in inverse.row(i))
            for i in range(self.rank)
        )

    @property
    def dual_coxeter_number(self) -> int:
        return 1 + sum(self.comarks)

    @property
    def coxeter_number(self) -> int:
        return 1 + sum(self.marks)

    @property
    def affine_comarks(self) -> IntVector:
        """Comarks indexed by the affine node set S = {0, ..., rank}."""
        return (1,) + self.comarks

    @property
    def affine_marks(self) -> IntVector:
        return (1,) + self.marks

    def simple_root(self, index: int) -> Weight:
        """alpha_index in fundamental-weight coordinates, 1-based."""
        return Weight(self.cartan[index - 1])

    def root_to_weight(self, root: Sequence[int]) -> Weight:
        """Convert simple-root coordinates to fundamental-weight coordinates."""
        return Weight(tuple(int(x) for x in np.asarray(root, dtype=np.int64) @ self.cartan_array))

    def to_root_coords(self, weight: Weight) -> Tuple[Fraction, ...]:
        inv = self.inverse_cartan
        return tuple(
            sum((Fraction(weight.coords[i]) * inv[i][j] for i in range(self.rank)), Fraction(0))
            for j in range(self.rank)
        )

    def inner(self, a: Weight, b: Weight) -> Fraction:
        """Invariant form (a, b) with (theta, theta) = 2."""
        b_root = self.to_root_coords(b)
        return sum((b_root[j] * a.coords[j] * self.root_lengths[j] / 2 for j in range(self.rank)),
                   Fraction(0))

    def root_norm(self, root: Sequence[int]) -> Fraction:
        return sum((Fraction(root[i] * root[j] * self.cartan[i][j]) * self.root_lengths[j] / 2
                    for i in range(self.rank) for j in range(self.rank)), Fraction(0))

    def coroot_covec(self, root: Sequence[int]) -> IntVector:
        """Integer row c with <lambda, beta^vee> = sum_i lambda_i c_i."""
        norm = self.root_norm(root)
        covec = [Fraction(root[j]) * self.root_lengths[j] / norm for j in range(self.rank)]
        if any(c.denominator != 1 for c in covec):
            raise ArithmeticError(f"coroot of {root} is not integral in {self.name}")
        return tuple(int(c) for c in covec)

    @cached_property
    def positive_roots_omega(self) -> Tuple[Weight, ...]:
        return tuple(self.root_to_weight(r) for r in self.positive_roots)

    @cached_property
    def positive_coroot_covecs(self) -> Tuple[IntVector, ...]:
        return tuple(self.coroot_covec(r) for r in self.positive_roots)

    def theta_pairing(self, weight: Weight) -> int:
        """lambda(theta^vee)."""
        return _pair(weight.coords, self.theta_covec)

    def weyl_group(self) -> "ReflectionSubgroup":
        return _full_weyl_group(self)

    def dominant_conjugate(self, weight: Weight) -> Tuple[Weight, int]:
        """Dominant element of the W-orbit (linear action) and the number of reflections used."""
        coords = list(weight.coords)
        steps = 0
        while True:
            negative = next((i for i, c in enumerate(coords) if c < 0), None)
            if negative is None:
                return Weight(coords), steps
            n = coords[negative]
            for j in range(self.rank):
                coords[j] -= n * self.cartan[negative][j]
            steps += 1

    def orbit(self, weight: Weight) -> List[Weight]:
        """W-orbit of a weight under the linear action, sorted."""
        seen = {weight}
        queue = deque([weight])
        while queue:
            current = queue.popleft()
            for i in range(self.rank):
                n = current.coords[i]
                if n == 0:
                    continue
                image = current - self.simple_root(i + 1) * n
                if image not in seen:
                    seen.add(image)
                    queue.append(image)
        return sorted(seen)


def check_root_datum(datum: RootDatum) -> Dict[str, object]:
    """Re-verify the structural invariants of a root datum; returns {"valid", "errors"}."""
    errors = []
    c = datum.cartan
    n = datum.rank
    for i in range(n):
        if c[i][i] != 2:
            errors.append(f"cartan[{i}][{i}] != 2")
        for j in range(n):
            if i != j and c[i][j] > 0:
                errors.append(f"cartan[{i}][{j}] > 0")
            if c[i][j] * datum.root_lengths[j] != c[j][i] * datum.root_lengths[i]:
                errors.append(f"cartan not symmetrizable at ({i}, {j})")

    # theta^vee = sum a_i^vee alpha_i^vee, read off in the fundamental-coweight basis
    lhs = [sum(c[j][i] * datum.comarks[i] for i in range(n)) for j in range(n)]
    rhs = [_pair(datum.simple_root(j + 1).coords, datum.theta_covec) for j in range(n)]
    if lhs != rhs:
        errors.append("comarks do not solve theta^vee = sum a^vee alpha^vee")
    if tuple(datum.theta_covec) != tuple(datum.comarks):
        errors.append("theta covector differs from comarks")
    if datum.affine_comarks[0] != 1:
        errors.append("affine comark is not 1")
    return {"valid": not errors, "errors": errors, "datum": datum.name}


@lru_cache(maxsize=None)
def build_root_datum(type_letter: str, rank: int) -> RootDatum:
    """Build the Cartan data of a simple type, solving for the comarks exactly."""
    letter = str(type_letter).upper()
    if letter not in VALID_RANKS or not isinstance(rank, int) or not VALID_RANKS[letter](rank):
        raise ValidationError(
            f"Invalid simple type {type_letter}{rank}: expected A_n (n>=1), B_n/C_n (n>=2), "
            f"D_n (n>=4), E_6-E_8, F_4 or G_2"
        )

    cartan = _cartan_matrix(letter, rank)
    lengths = _root_lengths(cartan)
    roots = _positive_roots(cartan.tolist())
    theta_root = roots[-1]
    if sum(theta_root) != max(sum(r) for r in roots) or \
            sum(1 for r in roots if sum(r) == sum(theta_root)) != 1:
        raise ArithmeticError(f"highest root of {letter}{rank} is not unique")

    theta = Weight(tuple(int(x) for x in np.asarray(theta_root) @ cartan))

    # <alpha_j, theta^vee> = 2 (alpha_j, theta) / (theta, theta) with (theta, theta) = 2
    rhs = [sum(Fraction(int(cartan[j, i]) * theta_root[i]) * lengths[i] / 2 for i in range(rank))
           for j in range(rank)]
    solution = sympy.Matrix(cartan.tolist()).LUsolve(sympy.Matrix([sympy.Rational(x.numerator, x.denominator)
                                                                 for x in rhs]))
    if any(not x.is_integer for x in solution):
        raise ArithmeticError(f"comark system of {letter}{rank} has no integer solution")
    comarks = tuple(int(x) for x in solution)

    # independent read-off a_i^vee = a_i (alpha_i, alpha_i) / 2
    if comarks != tuple(int(theta_root[i] * lengths[i] / 2) for i in range(rank)):
        raise ArithmeticError(f"comark solve disagrees with mark rescaling for {letter}{rank}")

    provisional = RootDatum(
        type_letter=letter,
        rank=rank,
        cartan=tuple(tuple(int(x) for x in row) for row in cartan),
        root_lengths=lengths,
        positive_roots=tuple(roots),
        theta=theta,
        theta_covec=(),
        comarks=comarks,
        marks=tuple(theta_root),
        w0_action=(),
    )
    theta_covec = provisional.coroot_covec(theta_root)

    # w0(omega_i) = -omega_sigma(i)
    w0_action = []
    for i in range(1, rank + 1):
        image, _ = provisional.dominant_conjugate(-Weight.fundamental(rank, i))
        target = image.coords.index(1) + 1
        w0_action.append((target, -1))

    datum = RootDatum(
        type_letter=letter,
        rank=rank,
        cartan=provisional.cartan,
        root_lengths=lengths,
        positive_roots=provisional.positive_roots,
        theta=theta,
        theta_covec=theta_covec,
        comarks=comarks,
        marks=tuple(theta_root),
        w0_action=tuple(w0_action),
    )
    logger.log_quantity(f"comarks({datum.name})", comarks, EQUATION_TAGS["comarks"])
    return datum


class ReflectionSubgroup:
    """Finite reflection subgroup of W given by a simple system of roots.

    Simple roots are given in ambient simple-root coordinates and may be
    negative (the affine node contributes -theta). Elements are never stored
    as words beyond what brute-force enumeration needs; the dot action and its
    length are computed greedily with the subsystem's own rho.
    """

    def __init__(self, datum: RootDatum, simple_roots: Sequence[Sequence[int]],
                 labels: Optional[Sequence[int]] = None):
        self.datum = datum
        self.simple_roots = tuple(tuple(int(x) for x in r) for r in simple_roots)
        self.labels = tuple(labels) if labels is not None else tuple(range(1, len(self.simple_roots) + 1))
        self.simple_weights = tuple(datum.root_to_weight(r) for r in self.simple_roots)
        self.simple_covecs = tuple(datum.coroot_covec(r) for r in self.simple_roots)
        self.cartan = tuple(
            tuple(_pair(self.simple_weights[i].coords, self.simple_covecs[j])
                  for j in range(self.rank))
            for i in range(self.rank)
        )
        local_roots = _positive_roots(self.cartan)
        self.positive_roots = tuple(
            tuple(sum(c[k] * self.simple_roots[k][i] for k in range(self.rank)) for i in range(datum.rank))
            for c in local_roots
        )
        self.positive_covecs = tuple(datum.coroot_covec(r) for r in self.positive_roots)
        two_rho = datum.zero
        for root in self.positive_roots:
            two_rho = two_rho + datum.root_to_weight(root)
        self.two_rho = two_rho
        self.rho = tuple(Fraction(x, 2) for x in two_rho.coords)

    @property
    def rank(self) -> int:
        return len(self.simple_roots)

    def pairings(self, weight: Weight) -> IntVector:
        """<lambda, beta_k^vee> for the simple roots beta_k."""
        return tuple(_pair(weight.coords, covec) for covec in self.simple_covecs)

    def is_dominant(self, weight: Weight) -> bool:
        return all(p >= 0 for p in self.pairings(weight))

    def is_dot_regular(self, weight: Weight) -> bool:
        doubled = weight * 2 + self.two_rho
        return all(_pair(doubled.coords, covec) != 0 for covec in self.positive_covecs)

    def reflect(self, weight: Weight, k: int) -> Weight:
        return weight - self.simple_weights[k] * _pair(weight.coords, self.simple_covecs[k])

    def dot_reflect(self, weight: Weight, k: int) -> Weight:
        return weight - self.simple_weights[k] * (_pair(weight.coords, self.simple_covecs[k]) + 1)

    def dot_dominant(self, weight: Weight) -> Union[Singular, Tuple[int, Weight]]:
        """Length of the unique w with w * lambda dominant, and w * lambda; SINGULAR on a wall."""
        current = weight
        length = 0
        bound = len(self.positive_roots)
        while True:
            shifted = [p + 1 for p in self.pairings(current)]
            negative = next((k for k, p in enumerate(shifted) if p < 0), None)
            if negative is None:
                if any(p == 0 for p in shifted):
                    return SINGULAR
                return length, current
            current = self.dot_reflect(current, negative)
            length += 1
            if length > bound:
                raise ArithmeticError(f"dot action did not reach the dominant chamber for {weight}")

    def weyl_dim(self, weight: Weight) -> int:
        """Weyl dimension formula of the subsystem for a weight dominant for it."""
        if not self.is_dominant(weight):
            raise ValidationError(f"{weight} is not dominant for the reflection subgroup")
        shifted = weight * 2 + self.two_rho
        value = Fraction(1)
        for covec in self.positive_covecs:
            value *= Fraction(_pair(shifted.coords, covec), _pair(self.two_rho.coords, covec))
        if value.denominator != 1:
            raise ArithmeticError(f"non-integral Weyl dimension for {weight}")
        return int(value)

    def generator_matrices(self) -> List[np.ndarray]:
        """Simple reflections acting on row vectors of fundamental-weight coordinates."""
        identity = np.eye(self.datum.rank, dtype=np.int64)
        return [identity - np.outer(np.array(covec, dtype=np.int64), np.array(root.coords, dtype=np.int64))
                for covec, root in zip(self.simple_covecs, self.simple_weights)]

    def elements(self) -> Tuple[Tuple[np.ndarray, int], ...]:
        """All group elements with their Coxeter lengths, by breadth-first search."""
        return self._elements

    @cached_property
    def _elements(self) -> Tuple[Tuple[np.ndarray, int], ...]:
        identity = np.eye(self.datum.rank, dtype=np.int64)
        generators = self.generator_matrices()
        found = {identity.tobytes(): (identity, 0)}
        frontier = [identity]
        depth = 0
        while frontier:
            depth += 1
            next_frontier = []
            for element in frontier:
                for generator in generators:
                    product = element @ generator
                    key = product.tobytes()
                    if key not in found:
                        found[key] = (product, depth)
                        next_frontier.append(product)
            frontier = next_frontier
        return tuple(found[key] for key in sorted(found, key=lambda k: (found[k][1], k)))

    def order(self) -> int:
        return len(self.elements())

    def length(self, element: np.ndarray) -> int:
        for matrix, length in self.elements():
            if np.array_equal(matrix, element):
                return length
        raise ValidationError("matrix is not an element of this reflection subgroup")

    @staticmethod
    def act(element: np.ndarray, weight: Weight) -> Weight:
        return Weight(tuple(int(x) for x in np.asarray(weight.coords, dtype=np.int64) @ element))

    def __repr__(self):
        return f"ReflectionSubgroup({self.datum.name}, simple={self.labels})"


@lru_cache(maxsize=None)
def _full_weyl_group(datum: RootDatum) -> ReflectionSubgroup:
    simple = [tuple(1 if k == i else 0 for k in range(datum.rank)) for i in range(datum.rank)]
    return ReflectionSubgroup(datum, simple, labels=range(1, datum.rank + 1))


def weyl_group(datum: RootDatum) -> ReflectionSubgroup:
    return _full_weyl_group(datum)


def reflection_subgroup(datum: RootDatum, simple_roots: Sequence[Sequence[int]],
                        labels: Optional[Sequence[int]] = None) -> ReflectionSubgroup:
    """Reflection subgroup generated by a simple system given in simple-root coordinates."""
    for root in simple_roots:
        if len(root) != datum.rank:
            raise ValidationError(f"root {tuple(root)} has length {len(root)}, expected {datum.rank}")
    return ReflectionSubgroup(datum, simple_roots, labels)


def dual_coxeter_number(datum: RootDatum) -> int:
    return datum.dual_coxeter_number


def _require_dominant(weight: Weight, datum: RootDatum, name: str = "weight"):
    if weight.rank != datum.rank:
        raise ValidationError(f"{name} {weight.coords} has length {weight.rank}, expected {datum.rank}")
    if not weight.is_dominant():
        raise ValidationError(f"{name} {weight} is not dominant")


def dot_dominant(datum: RootDatum, weight: Weight) -> Union[Singular, Tuple[int, Weight]]:
    """w * lambda = w(lambda + rho) - rho moved into the dominant chamber."""
    if weight.rank != datum.rank:
        raise ValidationError(f"weight {weight.coords} has length {weight.rank}, expected {datum.rank}")
    return datum.weyl_group().dot_dominant(weight)


def weyl_dim(datum: RootDatum, weight: Weight) -> int:
    """Dimension of V_lambda by the Weyl dimension formula."""
    _require_dominant(weight, datum)
    value = Fraction(1)
    shifted = weight + datum.rho
    for covec in datum.positive_coroot_covecs:
        value *= Fraction(_pair(shifted.coords, covec), sum(covec))
    return int(value)


def dual_weight(datum: RootDatum, weight: Weight) -> Weight:
    """lambda^dagger = -w_0 lambda."""
    coords = [0] * datum.rank
    for i, (target, sign) in enumerate(datum.w0_action):
        coords[target - 1] += -sign * weight.coords[i]
    return Weight(coords)


def dominant_weights(datum: RootDatum, highest: Weight) -> List[Weight]:
    """Dominant weights of V_highest, ordered by depth below the highest weight."""
    _require_dominant(highest, datum, "highest weight")
    seen = {highest}
    queue = deque([highest])
    while queue:
        current = queue.popleft()
        for root in datum.positive_roots_omega:
            lower = current - root
            if lower.is_dominant() and lower not in seen:
                seen.add(lower)
                queue.append(lower)

    def depth(weight: Weight) -> Fraction:
        return sum(datum.to_root_coords(highest - weight), Fraction(0))

    return sorted(seen, key=lambda w: (depth(w), w))


def dominant_multiplicities(datum: RootDatum, highest: Weight) -> Dict[Weight, int]:
    """Freudenthal multiplicities of the dominant weights of V_highest (memoized per datum)."""
    cache = datum._multiplicity_cache
    if highest in cache:
        return cache[highest]

    order = dominant_weights(datum, highest)
    shifted_top = highest + datum.rho
    top_norm = datum.inner(shifted_top, shifted_top)
    mults: Dict[Weight, int] = {highest: 1}

    for weight in order[1:]:
        numerator = Fraction(0)
        for root in datum.positive_roots_omega:
            k = 1
            while True:
                raised = weight + root * k
                dominant, _ = datum.dominant_conjugate(raised)
                m = mults.get(dominant, 0)
                if m == 0:
                    break
                numerator += m * datum.inner(raised, root)
                k += 1
        shifted = weight + datum.rho
        denominator = top_norm - datum.inner(shifted, shifted)
        value = 2 * numerator / denominator
        if value.denominator != 1:
            raise ArithmeticError(f"Freudenthal produced non-integer multiplicity at {weight}")
        mults[weight] = int(value)

    result = {w: mults[w] for w in order if mults[w] > 0}
    cache[highest] = result
    return result


def weight_multiplicities(datum: RootDatum, highest: Weight) -> Dict[Weight, int]:
    """All weights of V_highest with multiplicities."""
    result: Dict[Weight, int] = {}
    for dominant, m in dominant_multiplicities(datum, highest).items():
        for weight in datum.orbit(dominant):
            result[weight] = m
    return dict(sorted(result.items()))


def tensor_decompose(datum: RootDatum, lam: Weight, mu: Weight) -> Dict[Weight, int]:
    """V_lam (x) V_mu as {nu: multiplicity}, by Klimyk's formula."""
    _require_dominant(lam, datum, "lambda")
    _require_dominant(mu, datum, "mu")
    small, large = (lam, mu) if weyl_dim(datum, lam) <= weyl_dim(datum, mu) else (mu, lam)

    totals: Dict[Weight, int] = {}
    for weight, m in weight_multiplicities(datum, small).items():
        result = dot_dominant(datum, large + weight)
        if result is SINGULAR:
            continue
        length, rep = result
        totals[rep] = totals.get(rep, 0) + (-1) ** length * m

    if any(v < 0 for v in totals.values()):
        raise ArithmeticError(f"negative multiplicity in {lam} (x) {mu}")
    return {nu: totals[nu] for nu in sorted(totals) if totals[nu] > 0}


def iter_weights_in_box(rank: int, low: int, high: int) -> Iterator[Weight]:
    """All weights with every coordinate in [low, high], lexicographic."""
    coords = [low] * rank
    while True:
        yield Weight(coords)
        i = rank - 1
        while i >= 0 and coords[i] == high:
            coords[i] = low
            i -= 1
        if i < 0:
            return
        coords[i] += 1
