import json
from typing import Dict, Any, List, Optional

SCHEMA_VERSION = 1

EXIT_OK = 0
EXIT_INTERNAL_ERROR = 1
EXIT_USER_ERROR = 2


class ValidationError(Exception):
    """Invalid user input: bad type/rank, malformed job, non-dominant weight, index mismatch"""
    pass


class InadmissibleWeightError(ValidationError):
    """An insertion weight is not in P_c^F for the facet at its point"""

    def __init__(self, point: str, message: str):
        super().__init__(f"point {point!r}: {message}")
        self.point = point


class OracleDisagreementError(Exception):
    """Two independent computations of the same quantity disagree (a bug, never a user error)"""
    pass


# Provenance label attached to each reported quantity
EQUATION_TAGS = {
    "cartan": "Bourbaki Cartan matrix",
    "theta": "Eq. (corootcoeff)",
    "positive_roots": "Bourbaki root system",
    "comarks": "Eq. (corootcoeff)",
    "marks": "Eq. (corootcoeff)",
    "dual_coxeter_number": "Eq. (corootcoeff)",
    "coxeter_number": "Eq. (corootcoeff)",
    "facet": "Eq. (sx)",
    "facet_dimension": "Eq. (sx)",
    "levi_nodes": "Eq. (ellz)",
    "levi_positive_roots": "Eq. (ellz)",
    "character_rank": "Eq. (picseq1)",
    "l_of_facet": "Eq. (localofF)",
    "ell": "Eq. (f)",
    "weights": "Defi pcf / Eq. (levelF)",
    "central_charge": "Eq. (centralcharge)",
    "descends": "Prop redtoIwa",
    "free_rank": "Eq. (picseq1)",
    "charge_index": "Eq. (picseq1)",
    "faltings_power": "Eq. (piLh)",
    "characters": "Eq. (Bxchar)",
    "fusion": "Theorem superparahoricfactorisation",
    "dim": "Cor SplitGamma=Verlinde",
    "propagated_dim": "Theorem propofvacua",
    "hecke_dim": "Eq. (Hecke transformisom)",
    "b_pi": "Eq. (b1)",
    "b_h": "Eq. (b2)",
    "shift": "Cor parahoricbwb",
    "evaluation_dims": "Eq. (bwbclassical)",
    "levi_lengths": "Eq. (ellz)",
}

COMMON_FIELDS = {"schema_version", "command", "type", "rank"}

COMMAND_FIELDS = {
    "root-data": (set(), set()),
    "facets": (set(), set()),
    "levels": ({"points"}, set()),
    "weights": ({"level"}, {"facet"}),
    "picard": ({"points"}, {"bundle"}),
    "descend": ({"points", "bundles"}, set()),
    "fusion": ({"level", "lambda", "mu"}, {"nu"}),
    "verlinde": ({"level", "genus"}, {"points", "insertions", "oracle"}),
    "propagate": ({"level", "genus", "new_point"}, {"points", "insertions"}),
    "hecke": ({"level", "genus", "points", "point"}, {"insertions"}),
    "bwb": ({"markings"}, {"twist"}),
}


class JobSpecValidator:
    """Validates job specifications before execution"""

    @staticmethod
    def validate(job: Any) -> Dict[str, Any]:
        """Validate a job dict; unknown fields are rejected"""
        errors = []

        if not isinstance(job, dict):
            return {"valid": False, "errors": ["Job must be a JSON object"], "job": job}

        command = job.get("command")
        if command not in COMMAND_FIELDS:
            errors.append(f"Unknown command: {command!r}; expected one of {sorted(COMMAND_FIELDS)}")
            return {"valid": False, "errors": errors, "job": job}

        version = job.get("schema_version", SCHEMA_VERSION)
        if version != SCHEMA_VERSION:
            errors.append(f"Unsupported schema_version {version!r} (expected {SCHEMA_VERSION})")

        for field in ("type", "rank"):
            if field not in job:
                errors.append(f"Missing required field: {field}")
        if "type" in job and not isinstance(job["type"], str):
            errors.append("type must be a string such as \"A\"")
        if "rank" in job and not _is_int(job["rank"]):
            errors.append("rank must be an integer")

        required, optional = COMMAND_FIELDS[command]
        for field in sorted(required):
            if field not in job:
                errors.append(f"Missing required field for {command}: {field}")

        allowed = COMMON_FIELDS | required | optional
        for field in sorted(set(job) - allowed):
            errors.append(f"Unknown field for {command}: {field}")

        for field in ("level", "genus", "twist"):
            if field in job and (not _is_int(job[field]) or job[field] < 0):
                errors.append(f"{field} must be a nonnegative integer")

        if "oracle" in job and not isinstance(job["oracle"], bool):
            errors.append("oracle must be true or false")

        if "point" in job and not isinstance(job["point"], str):
            errors.append("point must be a point label")

        if "points" in job:
            errors.extend(JobSpecValidator.validate_points(job["points"]))

        return {
            "valid": len(errors) == 0,
            "errors": errors,
            "job": job
        }

    @staticmethod
    def validate_points(points: Any) -> List[str]:
        """Validate a list of {"label", "facet"} objects"""
        errors = []
        if not isinstance(points, list):
            return ["points must be a list of {\"label\", \"facet\"} objects"]
        seen = set()
        for index, point in enumerate(points):
            if not isinstance(point, dict) or set(point) != {"label", "facet"}:
                errors.append(f"points[{index}] must have exactly the fields label and facet")
                continue
            if not isinstance(point["label"], str):
                errors.append(f"points[{index}].label must be a string")
            elif point["label"] in seen:
                errors.append(f"Duplicate point label: {point['label']}")
            else:
                seen.add(point["label"])
            if not isinstance(point["facet"], list) or not all(_is_int(i) for i in point["facet"]):
                errors.append(f"points[{index}].facet must be an array of integers")
        return errors


def _is_int(value: Any) -> bool:
    return isinstance(value, int) and not isinstance(value, bool)


def tagged(name: str, value: Any) -> Dict[str, Any]:
    """Attach the equation label of a quantity to its value"""
    return {"value": value, "tag": EQUATION_TAGS[name]}


def format_json_response(data: Any, indent: Optional[int] = 2) -> str:
    """Format a report as deterministic JSON"""
    try:
        return json.dumps(data, indent=indent, ensure_ascii=False, sort_keys=True)
    except (TypeError, ValueError):
        return str(data)


def format_weight(coords) -> str:
    """Human label of a weight in fundamental-weight coordinates, e.g. 2ω_1+ω_2"""
    coords = list(coords)
    if not any(coords):
        return "0"
    parts = []
    for index, n in enumerate(coords, start=1):
        if n == 0:
            continue
        symbol = "ω" if len(coords) == 1 else f"ω_{index}"
        if n == 1:
            term = symbol
        elif n == -1:
            term = f"-{symbol}"
        else:
            term = f"{n}{symbol}"
        parts.append(term)
    return "+".join(parts).replace("+-", "-")
