"""
Level-c fusion ring and Verlinde dimensions of parahoric conformal blocks.

Fusion coefficients come from the Klimyk expansion folded by the shifted
affine Weyl group at level c (Kac-Walton). Dimensions of spaces of vacua are
computed by genus-0 fusion contraction and handle factorization; an
independent S-matrix evaluation in mpmath serves as an oracle.
"""

import contextlib
import json
import os
import tempfile
import threading
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple, Union

import mpmath

from alcove import Facet, ParahoricDatum, ell_of_datum, enumerate_P_c, enumerate_P_c_F
from config import config
from liealg import SINGULAR, RootDatum, Singular, Weight, dual_weight, weight_multiplicities, weyl_dim
from logger_config import logger
from utils import (EQUATION_TAGS, SCHEMA_VERSION, InadmissibleWeightError, OracleDisagreementError,
                   ValidationError)

HANDLE_POSITIONS = ("append", "prepend")
VACUA_MEMO_SIZE = 100_000


class FusionTable:
    """Fusion coefficients N_{lambda mu}^nu over the basis P_c, filled on demand.

    Rows are keyed by the unordered pair (lambda, mu). Concurrent fills of the
    same row compute the same value and the first stored one wins.
    """

    def __init__(self, datum: RootDatum, level: int, cache_dir: Optional[str] = None,
                 persist: Optional[bool] = None):
        if level is None or level < 0:
            raise ValidationError(f"fusion level must be a nonnegative integer, got {level!r}")
        cache = config.get_cache_config()
        self.datum = datum
        self.level = level
        self.basis = tuple(enumerate_P_c(datum, level))
        self._members = frozenset(self.basis)
        self._products: Dict[Tuple[Weight, Weight], Dict[Weight, int]] = {}
        self._vacua: Dict[Tuple[Tuple[Weight, ...], int, str], int] = {}
        self._lock = threading.Lock()
        self._dirty = False
        self.persist = cache["enabled"] if persist is None else persist
        directory = cache_dir or cache["cache_dir"]
        self.cache_path = Path(directory) / f"fusion-{datum.type_letter}{datum.rank}-level{level}.json"
        if self.persist:
            self.load()

    @property
    def shifted_level(self) -> int:
        return self.level + self.datum.dual_coxeter_number

    def __contains__(self, weight: Weight) -> bool:
        return weight in self._members

    def require_member(self, weight: Weight, name: str = "weight"):
        if weight.rank != self.datum.rank:
            raise ValidationError(f"{name} {weight.coords} has length {weight.rank}, expected {self.datum.rank}")
        if weight not in self._members:
            raise ValidationError(f"{name} {weight} is not in P_c at level {self.level}")

    def affine_dot_dominant(self, weight: Weight) -> Union[Singular, Tuple[int, Weight]]:
        """Fold weight + rho into the level-c alcove; SINGULAR when it lands on a wall."""
        datum = self.datum
        k = self.shifted_level
        x = list((weight + datum.rho).coords)
        theta = datum.theta.coords
        length = 0
        guard = 4 * (len(datum.positive_roots) + 1) * (sum(abs(v) for v in x) + k)
        while True:
            negative = next((i for i, v in enumerate(x) if v < 0), None)
            if negative is not None:
                n = x[negative]
                row = datum.cartan[negative]
                x = [v - n * a for v, a in zip(x, row)]
            else:
                height = sum(v * a for v, a in zip(x, datum.theta_covec))
                if height <= k:
                    break
                x = [v - (height - k) * t for v, t in zip(x, theta)]
            length += 1
            if length > guard:
                raise ArithmeticError(f"affine folding of {weight} did not terminate")

        height = sum(v * a for v, a in zip(x, datum.theta_covec))
        if any(v == 0 for v in x) or height == k:
            return SINGULAR
        return length, Weight(x) - datum.rho

    def _kac_walton(self, lam: Weight, mu: Weight) -> Dict[Weight, int]:
        small, large = (lam, mu) if weyl_dim(self.datum, lam) <= weyl_dim(self.datum, mu) else (mu, lam)
        totals: Dict[Weight, int] = {}
        for weight, m in weight_multiplicities(self.datum, small).items():
            folded = self.affine_dot_dominant(large + weight)
            if folded is SINGULAR:
                continue
            length, rep = folded
            totals[rep] = totals.get(rep, 0) + (-1) ** length * m

        row = {nu: totals[nu] for nu in sorted(totals) if totals[nu] != 0}
        for nu, n in row.items():
            if n < 0 or nu not in self._members:
                raise ArithmeticError(f"Kac-Walton produced N = {n} at {nu} for {lam} x {mu}")
        return row

    def product(self, lam: Weight, mu: Weight) -> Dict[Weight, int]:
        key = (lam, mu) if lam <= mu else (mu, lam)
        with self._lock:
            row = self._products.get(key)
        if row is not None:
            return row
        row = self._kac_walton(*key)
        with self._lock:
            row = self._products.setdefault(key, row)
            self._dirty = True
        return row

    def coeff(self, lam: Weight, mu: Weight, nu: Weight) -> int:
        return self.product(lam, mu).get(nu, 0)

    def fill(self):
        for i, lam in enumerate(self.basis):
            for mu in self.basis[i:]:
                self.product(lam, mu)

    def to_json(self) -> Dict[str, Any]:
        with self._lock:
            items = sorted(self._products.items())
        return {
            "schema_version": SCHEMA_VERSION,
            "type": self.datum.type_letter,
            "rank": self.datum.rank,
            "level": self.level,
            "products": [[list(lam.coords), list(mu.coords), [[list(nu.coords), n] for nu, n in row.items()]]
                         for (lam, mu), row in items],
        }

    def load(self) -> bool:
        """Merge rows from the cache file; a damaged or mismatched file is ignored."""
        try:
            with open(self.cache_path, "r", encoding="utf-8") as f:
                data = json.load(f)
        except FileNotFoundError:
            logger.log_cache("miss", str(self.cache_path))
            return False
        except (OSError, ValueError) as e:
            logger.logger.warning(f"⚠️  Ignoring unreadable fusion cache {self.cache_path}: {e}")
            return False

        try:
            header = (data["schema_version"], data["type"], data["rank"], data["level"])
            if header != (SCHEMA_VERSION, self.datum.type_letter, self.datum.rank, self.level):
                raise ValueError(f"header {header} does not match this table")
            rows = {}
            for lam, mu, entries in data["products"]:
                key = (Weight(lam), Weight(mu))
                row = {Weight(nu): int(n) for nu, n in entries}
                if not all(w in self._members for w in (*key, *row)):
                    raise ValueError(f"row {lam} x {mu} leaves P_c")
                rows[key] = row
        except (KeyError, TypeError, ValueError) as e:
            logger.logger.warning(f"⚠️  Ignoring corrupt fusion cache {self.cache_path}: {e}")
            return False

        with self._lock:
            for key, row in rows.items():
                self._products.setdefault(key, row)
        logger.log_cache("hit", str(self.cache_path))
        return True

    def save(self):
        """Write the table atomically; failures are logged, never raised."""
        if not self.persist or not self._dirty:
            return
        payload = json.dumps(self.to_json(), sort_keys=True)
        tmp = None
        try:
            self.cache_path.parent.mkdir(parents=True, exist_ok=True)
            fd, tmp = tempfile.mkstemp(dir=self.cache_path.parent, prefix=".fusion-", suffix=".tmp")
            with os.fdopen(fd, "w", encoding="utf-8") as f:
                f.write(payload)
            os.replace(tmp, self.cache_path)
            self._dirty = False
            logger.log_cache("write", str(self.cache_path))
        except OSError as e:
            if tmp is not None:
                with contextlib.suppress(OSError):
                    os.unlink(tmp)
            logger.logger.warning(f"⚠️  Could not write fusion cache {self.cache_path}: {e}")


_tables: Dict[Tuple[Any, ...], FusionTable] = {}
_tables_lock = threading.Lock()


def get_fusion_table(datum: RootDatum, level: int) -> FusionTable:
    """Shared table for (datum, level) under the current cache configuration."""
    cache = config.get_cache_config()
    key = (datum.key, level, cache["cache_dir"], cache["enabled"])
    with _tables_lock:
        table = _tables.get(key)
        if table is None:
            table = FusionTable(datum, level)
            _tables[key] = table
    return table


def clear_fusion_tables():
    with _tables_lock:
        _tables.clear()


def fusion_coeff(table: FusionTable, lam: Weight, mu: Weight, nu: Weight) -> int:
    """N_{lambda mu}^nu at the table's level."""
    table.require_member(lam, "lambda")
    table.require_member(mu, "mu")
    table.require_member(nu, "nu")
    return table.coeff(lam, mu, nu)


def fusion_product(table: FusionTable, lam: Weight, mu: Weight) -> Dict[Weight, int]:
    table.require_member(lam, "lambda")
    table.require_member(mu, "mu")
    return dict(table.product(lam, mu))


def _genus_zero(table: FusionTable, weights: Sequence[Weight]) -> int:
    if not weights:
        return 1
    state = {table.datum.zero: 1}
    for weight in weights[:-1]:
        following: Dict[Weight, int] = {}
        for sigma, count in state.items():
            for tau, n in table.product(sigma, weight).items():
                following[tau] = following.get(tau, 0) + count * n
        state = following
    return state.get(dual_weight(table.datum, weights[-1]), 0)


def vacua_dim(table: FusionTable, weights: Sequence[Weight], genus: int,
              handle_position: str = "append") -> int:
    """Dimension for a genus and an ordered tuple of weights in P_c.

    Each handle is traded for a pair (mu, mu^dagger) summed over all of P_c,
    placed after or before the existing weights.
    """
    if handle_position not in HANDLE_POSITIONS:
        raise ValidationError(f"handle_position must be one of {HANDLE_POSITIONS}")
    key = (tuple(weights), genus, handle_position)
    with table._lock:
        cached = table._vacua.get(key)
    if cached is not None:
        return cached

    if genus == 0:
        value = _genus_zero(table, key[0])
    else:
        value = 0
        for mu in table.basis:
            handle = (mu, dual_weight(table.datum, mu))
            extended = key[0] + handle if handle_position == "append" else handle + key[0]
            value += vacua_dim(table, extended, genus - 1, handle_position)

    with table._lock:
        if len(table._vacua) >= VACUA_MEMO_SIZE:
            # oldest first
            del table._vacua[next(iter(table._vacua))]
        table._vacua[key] = value
    return value


def admissible_weights(parahoric: ParahoricDatum, insertions: Mapping[str, Weight]) -> List[Weight]:
    """Insertion weights in point order, checked against P_c^F at each point.

    A point without an insertion carries the trivial weight, which must be admissible there too.
    """
    level = parahoric.require_level()
    datum = parahoric.datum
    unknown = sorted(set(insertions) - set(parahoric.labels))
    if unknown:
        raise ValidationError(f"insertions at unknown points {unknown}")
    if parahoric.points:
        ell = ell_of_datum(parahoric)
        if level % ell:
            raise ValidationError(f"level {level} is not a multiple of ell = {ell}")

    weights = []
    for point in parahoric.points:
        weight = insertions.get(point.label, datum.zero)
        if weight.rank != datum.rank:
            raise InadmissibleWeightError(point.label, f"weight {weight.coords} has the wrong length")
        if weight not in enumerate_P_c_F(datum, level, point.facet):
            raise InadmissibleWeightError(
                point.label,
                f"{weight} is not in P_c^F for facet {point.facet.to_list()} at level {level}"
            )
        weights.append(weight)
    return weights


def verlinde_dim(parahoric: ParahoricDatum, insertions: Mapping[str, Weight],
                 handle_position: str = "append") -> int:
    """Dimension of the space of parahoric vacua."""
    weights = admissible_weights(parahoric, insertions)
    table = get_fusion_table(parahoric.datum, parahoric.level)
    value = vacua_dim(table, weights, parahoric.genus, handle_position)
    table.save()
    logger.log_quantity("dim", value, EQUATION_TAGS["dim"])
    return value


def _mp_inner(datum: RootDatum, a: Weight, b: Weight):
    value = datum.inner(a, b)
    return mpmath.mpf(value.numerator) / value.denominator


def verlinde_dim_smatrix(datum: RootDatum, level: int, genus: int, insertions: Sequence[Weight]) -> int:
    """Trigonometric Verlinde formula in mpmath, rounded with a residual check."""
    basis = enumerate_P_c(datum, level)
    members = set(basis)
    for weight in insertions:
        if weight not in members:
            raise ValidationError(f"insertion {weight} is not in P_c at level {level}")
    oracle = config.get_oracle_config()
    k = level + datum.dual_coxeter_number
    multiplicities = [weight_multiplicities(datum, w) for w in insertions]

    with mpmath.workdps(oracle["dps"]):
        raw = []
        for mu in basis:
            shifted = mu + datum.rho
            value = mpmath.mpf(1)
            for root in datum.positive_roots_omega:
                value *= 2 * mpmath.sin(mpmath.pi * _mp_inner(datum, shifted, root) / k)
            raw.append(value)
        norm = mpmath.sqrt(mpmath.fsum(v ** 2 for v in raw))

        total = mpmath.mpc(0)
        for mu, s0 in zip(basis, raw):
            s0 = s0 / norm
            shifted = mu + datum.rho
            term = mpmath.mpc(s0) ** (2 - 2 * genus)
            for mults in multiplicities:
                term *= mpmath.fsum(
                    m * mpmath.expjpi(-2 * _mp_inner(datum, nu, shifted) / k) for nu, m in mults.items()
                )
            total += term

        rounded = int(mpmath.nint(total.real))
        residual = float(abs(total - rounded))

    ok = residual < oracle["tolerance"]
    logger.log_oracle_check(f"S-matrix {datum.name} level {level} genus {genus}", residual, ok)
    if not ok:
        raise OracleDisagreementError(
            f"S-matrix sum {mpmath.nstr(total, 15)} is {residual:.2e} away from {rounded}"
        )
    return rounded


def cross_check_verlinde(parahoric: ParahoricDatum, insertions: Mapping[str, Weight]) -> int:
    """verlinde_dim, confirmed by the S-matrix oracle."""
    weights = admissible_weights(parahoric, insertions)
    value = verlinde_dim(parahoric, insertions)
    oracle = verlinde_dim_smatrix(parahoric.datum, parahoric.level, parahoric.genus, weights)
    if oracle != value:
        raise OracleDisagreementError(f"fusion recursion gives {value}, S-matrix gives {oracle}")
    return value


def propagate(parahoric: ParahoricDatum, insertions: Mapping[str, Weight],
              new_point: Tuple[str, Facet]) -> int:
    """Dimension after adjoining a point carrying the trivial weight; equal to the dimension without it."""
    label, facet = new_point
    if label in parahoric.labels:
        raise ValidationError(f"point {label!r} is already marked")
    extended = parahoric.with_point(label, facet)
    level = parahoric.require_level()
    zero = parahoric.datum.zero
    if zero not in enumerate_P_c_F(parahoric.datum, level, facet):
        raise InadmissibleWeightError(label, f"the trivial weight is not in P_c^F for facet {facet.to_list()}")

    before = verlinde_dim(parahoric, insertions)
    after = verlinde_dim(extended, {**insertions, label: zero})
    if before != after:
        raise OracleDisagreementError(f"adjoining a trivial insertion changed the dimension {before} -> {after}")
    logger.log_quantity("propagated_dim", after, EQUATION_TAGS["propagated_dim"])
    return after


def hecke_transform(parahoric: ParahoricDatum, insertions: Mapping[str, Weight], point: str) -> Dict[str, int]:
    """Dimension at the point's facet and after moving the point to the hyperspecial vertex {0}.

    After the transform the point's weight is carried by the G-representation
    attached to the point, so it is only required to lie in P_c.
    """
    facet = parahoric.facet_of(point)
    weights = admissible_weights(parahoric, insertions)
    parahoric_dim = verlinde_dim(parahoric, insertions)

    others = {label: w for label, w in insertions.items() if label != point}
    representation = weights[parahoric.labels.index(point)]
    # the transformed point sits last, at {0}, with handles placed first
    moved = parahoric.without_point(point).with_point(point, Facet.vertex(0))
    hecke_dim = verlinde_dim(moved, {**others, point: representation}, handle_position="prepend")

    if representation.is_zero():
        dropped = verlinde_dim(parahoric.without_point(point), others)
        if dropped != hecke_dim:
            raise OracleDisagreementError(f"trivial Hecke transform gives {hecke_dim}, dropping the point gives {dropped}")
    if hecke_dim != parahoric_dim:
        raise OracleDisagreementError(
            f"Hecke transform at {point!r} (facet {facet.to_list()}) changed the dimension {parahoric_dim} -> {hecke_dim}"
        )
    logger.log_quantity("hecke_dim", hecke_dim, EQUATION_TAGS["hecke_dim"])
    return {"parahoric_dim": parahoric_dim, "hecke_dim": hecke_dim}
