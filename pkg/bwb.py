"""
Borel-Weil-Bott degree bookkeeping for parahoric flag bundles.

Each marking z carries a facet, a weight lambda_z and a boundary character
e(z). The degree b_pi adds up the Levi dot-lengths l_z(lambda_z); the degree
b_h adds up full Weyl group dot-lengths of lambda_z + n e(z).
"""

from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Tuple, Union

from alcove import Facet, levi_weyl, validate_facet
from liealg import SINGULAR, RootDatum, Singular, Weight, dot_dominant
from logger_config import logger
from utils import EQUATION_TAGS, ValidationError, _is_int


@dataclass(frozen=True)
class Marking:
    label: str
    facet: Facet
    weight: Weight
    boundary: Optional[Weight] = None


@dataclass(frozen=True)
class BwbInput:
    datum: RootDatum
    markings: Tuple[Marking, ...] = field(default_factory=tuple)
    twist: int = 0

    def __post_init__(self):
        rank = self.datum.rank
        markings = []
        seen = set()
        for marking in self.markings:
            if marking.label in seen:
                raise ValidationError(f"duplicate marking label {marking.label!r}")
            seen.add(marking.label)
            validate_facet(self.datum, marking.facet)
            if marking.weight.rank != rank:
                raise ValidationError(f"weight at {marking.label!r} has length {marking.weight.rank}, expected {rank}")
            boundary = marking.boundary if marking.boundary is not None else Weight.zero(rank)
            if boundary.rank != rank:
                raise ValidationError(f"boundary at {marking.label!r} has length {boundary.rank}, expected {rank}")
            outside = [i + 1 for i, n in enumerate(boundary.coords)
                       if n and (i + 1) not in marking.facet.finite_support]
            if outside:
                raise ValidationError(
                    f"boundary character at {marking.label!r} uses nodes {outside} "
                    f"outside facet {marking.facet.to_list()}"
                )
            markings.append(Marking(marking.label, marking.facet, marking.weight, boundary))
        object.__setattr__(self, "markings", tuple(markings))
        if not _is_int(self.twist) or self.twist < 0:
            raise ValidationError(f"twist must be a nonnegative integer, got {self.twist!r}")


def levi_dot_length(datum: RootDatum, facet: Facet, weight: Weight) -> Union[Singular, int]:
    """l_z(lambda): length moving lambda into the Levi's dominant chamber with the Levi's rho."""
    result = levi_weyl(datum, facet).dot_dominant(weight)
    if result is SINGULAR:
        return SINGULAR
    return result[0]


def levi_evaluation_dim(datum: RootDatum, facet: Facet, weight: Weight) -> Union[Singular, int]:
    """Dimension of the Levi representation classical BWB attaches to lambda."""
    levi = levi_weyl(datum, facet)
    result = levi.dot_dominant(weight)
    if result is SINGULAR:
        return SINGULAR
    return levi.weyl_dim(result[1])


def b_pi(bwb: BwbInput) -> Union[Singular, int]:
    total = 0
    for marking in bwb.markings:
        length = levi_dot_length(bwb.datum, marking.facet, marking.weight)
        if length is SINGULAR:
            return SINGULAR
        total += length
    logger.log_quantity("b_pi", total, EQUATION_TAGS["b_pi"])
    return total


def b_h(bwb: BwbInput) -> Union[Singular, int]:
    total = 0
    for marking in bwb.markings:
        combined = marking.weight + marking.boundary * bwb.twist
        result = dot_dominant(bwb.datum, combined)
        if result is SINGULAR:
            return SINGULAR
        total += result[0]
    logger.log_quantity("b_h", total, EQUATION_TAGS["b_h"])
    return total


def _plain(value: Union[Singular, int]) -> Union[str, int]:
    return str(value) if value is SINGULAR else value


def bwb_report(bwb: BwbInput) -> Dict[str, Any]:
    """b_pi, b_h, their difference, and the per-marking Levi data; singular entries read "singular"."""
    pi_degree = b_pi(bwb)
    h_degree = b_h(bwb)
    if pi_degree is SINGULAR or h_degree is SINGULAR:
        shift = SINGULAR
    else:
        shift = h_degree - pi_degree
    return {
        "b_pi": _plain(pi_degree),
        "b_h": _plain(h_degree),
        "shift": _plain(shift),
        "levi_lengths": {m.label: _plain(levi_dot_length(bwb.datum, m.facet, m.weight)) for m in bwb.markings},
        "evaluation_dims": {m.label: _plain(levi_evaluation_dim(bwb.datum, m.facet, m.weight))
                            for m in bwb.markings},
    }
