"""
Central charge, the Picard lattice of the parahoric moduli stack, the descent
criterion for line bundles from the Iwahori stack, and the splitting of
pullbacks into a power of the Faltings bundle plus boundary characters.
"""

from dataclasses import dataclass, field
from typing import Any, Dict, Mapping, Sequence, Tuple

from alcove import Facet, ParahoricDatum, character_rank, ell_of_datum, validate_facet
from liealg import RootDatum, Weight
from logger_config import logger
from utils import EQUATION_TAGS, ValidationError, _is_int


@dataclass(frozen=True)
class FlagLineBundle:
    """Line bundle on the affine flag variety: one degree per simple affine root."""
    coords: Tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "coords", tuple(int(c) for c in self.coords))

    def __add__(self, other: "FlagLineBundle") -> "FlagLineBundle":
        return FlagLineBundle(tuple(a + b for a, b in zip(self.coords, other.coords)))


@dataclass(frozen=True)
class StackLineBundle:
    """Line bundle on the parahoric stack, given by its charge and the tuple e(x) at every point.

    Each vector is indexed by the sorted S(F_x).
    """
    charge: int
    per_point: Dict[str, Tuple[int, ...]] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "per_point",
                           {str(k): tuple(int(n) for n in v) for k, v in self.per_point.items()})

    @classmethod
    def from_json(cls, data: Any) -> "StackLineBundle":
        if not isinstance(data, dict) or set(data) != {"charge", "points"}:
            raise ValidationError('stack line bundle must be {"charge": int, "points": {label: [ints]}}')
        if not _is_int(data["charge"]) or not isinstance(data["points"], dict):
            raise ValidationError("bundle charge must be an integer and points an object")
        for label, vector in data["points"].items():
            if not isinstance(vector, list) or not all(_is_int(n) for n in vector):
                raise ValidationError(f"bundle vector at {label!r} must be an array of integers")
        return cls(data["charge"], data["points"])

    def to_json(self) -> Dict[str, Any]:
        return {"charge": self.charge,
                "points": {label: list(v) for label, v in sorted(self.per_point.items())}}


def central_charge(datum: RootDatum, bundle: FlagLineBundle) -> int:
    """sum_alpha coords[alpha] a_alpha^vee over S, alpha_0 with comark 1."""
    if len(bundle.coords) != datum.rank + 1:
        raise ValidationError(
            f"flag line bundle has {len(bundle.coords)} coordinates, {datum.name} needs {datum.rank + 1}"
        )
    return sum(n * a for n, a in zip(bundle.coords, datum.affine_comarks))


def restricted_charge(datum: RootDatum, facet: Facet, vector: Sequence[int]) -> int:
    """Central charge of a vector indexed by the sorted S(F)."""
    validate_facet(datum, facet)
    if len(vector) != len(facet.nonvanishing):
        raise ValidationError(
            f"vector {list(vector)} does not match facet {facet.to_list()} "
            f"({len(facet.nonvanishing)} entries expected)"
        )
    comarks = datum.affine_comarks
    return sum(int(n) * comarks[i] for n, i in zip(vector, facet.nonvanishing))


def _check_labels(parahoric: ParahoricDatum, labels, what: str):
    expected = set(parahoric.labels)
    given = set(labels)
    if given != expected:
        missing = sorted(expected - given)
        extra = sorted(given - expected)
        raise ValidationError(f"{what} do not match the marked points (missing {missing}, unknown {extra})")


def descends(parahoric: ParahoricDatum, restrictions: Mapping[str, Sequence[int]]) -> Dict[str, Any]:
    """Does a tuple of Iwahori-level bundles come from the parahoric stack?

    Yes exactly when every point carries the same central charge and that charge
    is a multiple of ell.
    """
    _check_labels(parahoric, restrictions.keys(), "bundle labels")
    ell = ell_of_datum(parahoric)
    charges = {p.label: restricted_charge(parahoric.datum, p.facet, restrictions[p.label])
               for p in parahoric.points}

    first = parahoric.points[0].label
    common = charges[first]
    result = {"descends": True, "charges": charges, "ell": ell}
    for point in parahoric.points[1:]:
        if charges[point.label] != common:
            result.update(descends=False, reason=(
                f"unequal charges: point {point.label!r} has central charge {charges[point.label]} "
                f"but {first!r} has {common}"))
            return result
    if common % ell:
        result.update(descends=False, reason=f"not a multiple of ell: common charge {common}, ell = {ell}")
        return result
    result["reason"] = f"equal charge {common} at every point, a multiple of ell = {ell}"
    return result


def pic_lattice(parahoric: ParahoricDatum) -> Tuple[int, int]:
    """(free rank, index of the charge subgroup) of Pic of the parahoric stack."""
    if not parahoric.points:
        raise ValidationError("the Picard lattice is computed for a nonempty set of marked points")
    free_rank = 1 + sum(len(p.facet.nonvanishing) - 1 for p in parahoric.points)
    independent = 1 + sum(character_rank(parahoric.datum, p.facet) for p in parahoric.points)
    if free_rank != independent:
        raise ArithmeticError(f"Picard rank {free_rank} disagrees with Levi character count {independent}")
    ell = ell_of_datum(parahoric)
    logger.log_quantity("free_rank", free_rank, EQUATION_TAGS["free_rank"])
    return free_rank, ell


def validate_stack_bundle(parahoric: ParahoricDatum, bundle: StackLineBundle) -> Dict[str, Any]:
    errors = []
    expected = set(parahoric.labels)
    given = set(bundle.per_point)
    for label in sorted(expected - given):
        errors.append(f"no vector for point {label!r}")
    for label in sorted(given - expected):
        errors.append(f"vector for unknown point {label!r}")

    for point in parahoric.points:
        vector = bundle.per_point.get(point.label)
        if vector is None:
            continue
        if len(vector) != len(point.facet.nonvanishing):
            errors.append(f"point {point.label!r}: {len(vector)} entries for facet {point.facet.to_list()}")
            continue
        charge = restricted_charge(parahoric.datum, point.facet, vector)
        if charge != bundle.charge:
            errors.append(f"point {point.label!r}: central charge {charge} differs from bundle charge {bundle.charge}")

    if parahoric.points:
        ell = ell_of_datum(parahoric)
        if bundle.charge % ell:
            errors.append(f"charge {bundle.charge} is not a multiple of ell = {ell}")

    return {
        "valid": len(errors) == 0,
        "errors": errors
    }


def decompose_pullback(parahoric: ParahoricDatum, bundle: StackLineBundle) -> Tuple[int, Dict[str, Weight]]:
    """Faltings power and the B_x-character sum_{alpha != 0} n_alpha omega_alpha at every point."""
    validation = validate_stack_bundle(parahoric, bundle)
    if not validation["valid"]:
        raise ValidationError("; ".join(validation["errors"]))

    rank = parahoric.datum.rank
    characters = {}
    for point in parahoric.points:
        coords = [0] * rank
        for n, index in zip(bundle.per_point[point.label], point.facet.nonvanishing):
            if index:
                coords[index - 1] = n
        characters[point.label] = Weight(coords)
    logger.log_quantity("faltings_power", bundle.charge, EQUATION_TAGS["faltings_power"])
    return bundle.charge, characters


def rebuild_stack_bundle(parahoric: ParahoricDatum, faltings_power: int,
                         characters: Mapping[str, Weight]) -> StackLineBundle:
    """Inverse of decompose_pullback; the alpha_0 entry absorbs the remaining charge."""
    _check_labels(parahoric, characters.keys(), "character labels")
    comarks = parahoric.datum.comarks
    per_point = {}
    for point in parahoric.points:
        weight = characters[point.label]
        support = point.facet.finite_support
        outside = [i + 1 for i, n in enumerate(weight.coords) if n and (i + 1) not in support]
        if outside:
            raise ValidationError(
                f"point {point.label!r}: character {weight} uses nodes {outside} outside facet {point.facet.to_list()}"
            )
        finite_charge = sum(weight.coords[i - 1] * comarks[i - 1] for i in support)
        vector = []
        if point.facet.contains_affine_node:
            vector.append(faltings_power - finite_charge)
        elif finite_charge != faltings_power:
            raise ValidationError(
                f"point {point.label!r}: character {weight} has charge {finite_charge}, "
                f"not {faltings_power}, and facet {point.facet.to_list()} has no alpha_0 slot"
            )
        vector.extend(weight.coords[i - 1] for i in support)
        per_point[point.label] = tuple(vector)
    return StackLineBundle(faltings_power, per_point)


def stack_central_charge(parahoric: ParahoricDatum, bundle: StackLineBundle, via_point: str) -> int:
    facet = parahoric.facet_of(via_point)
    if via_point not in bundle.per_point:
        raise ValidationError(f"bundle has no vector at point {via_point!r}")
    return restricted_charge(parahoric.datum, facet, bundle.per_point[via_point])
