#!/usr/bin/env python3
"""
parahoric-blocks
Command-line entry point: runs one JSON job against the alcove, Picard,
fusion and BWB kernels and reports every quantity with its provenance tag.
"""

import sys
import json
import argparse
from typing import Any, Callable, Dict, Tuple

from config import config
from logger_config import logger
from alcove import (Facet, ParahoricDatum, enumerate_facets, enumerate_P_c, enumerate_P_c_F,
                    ell_of_datum, facet_summary, l_of_facet)
from bwb import BwbInput, Marking, bwb_report
from fusion import (cross_check_verlinde, fusion_coeff, fusion_product, get_fusion_table, hecke_transform,
                    propagate, verlinde_dim)
from liealg import RootDatum, Weight, build_root_datum
from picard import StackLineBundle, decompose_pullback, descends, pic_lattice
from utils import (EXIT_INTERNAL_ERROR, EXIT_OK, EXIT_USER_ERROR, SCHEMA_VERSION, JobSpecValidator,
                   OracleDisagreementError, ValidationError, _is_int, format_json_response, format_weight,
                   tagged)


def create_argument_parser():
    """Create command line argument parser"""
    parser = argparse.ArgumentParser(
        description="Combinatorics and Verlinde dimensions of parahoric conformal blocks",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  python main.py --input job.json              # Run one job, human-readable report
  python main.py --input job.json --json       # Same job, tagged JSON report
  python main.py --input - --json < job.json   # Read the job from stdin
  python main.py --seed-check                  # Run the built-in oracle suite

Job example:
  {"schema_version": 1, "command": "verlinde", "type": "A", "rank": 1,
   "level": 1, "genus": 2}
        """
    )

    parser.add_argument("--input", type=str, metavar="FILE", help="JSON job file ('-' for stdin)")
    parser.add_argument("--json", action="store_true", help="Emit the report as JSON")
    parser.add_argument("--seed-check", action="store_true", help="Run the built-in oracle suite")

    # Cache options
    parser.add_argument("--cache-dir", type=str, help="Fusion table cache directory (or set PARAHORIC_CACHE_DIR)")
    parser.add_argument("--no-cache", action="store_true", help="Do not read or write fusion table caches")

    parser.add_argument("--output", type=str, help="Output file for the report")

    # Logging
    parser.add_argument("--verbose", action="store_true", help="Enable verbose logging")
    parser.add_argument("--quiet", action="store_true", help="Only log errors")

    return parser


def print_banner():
    """Print application banner"""
    banner = """
    ╔═══════════════════════════════════════════════════════════════╗
    ║                      parahoric-blocks                         ║
    ║                                                               ║
    ║  Alcove invariants, Picard lattices, Verlinde dimensions      ║
    ║  and BWB degrees for parahoric conformal blocks               ║
    ╚═══════════════════════════════════════════════════════════════╝
    """
    print(banner, file=sys.stderr)


def _weight(value: Any, datum: RootDatum, name: str) -> Weight:
    if not isinstance(value, list) or not all(_is_int(n) for n in value):
        raise ValidationError(f"{name} must be an array of integers, got {value!r}")
    if len(value) != datum.rank:
        raise ValidationError(f"{name} has {len(value)} coordinates, {datum.name} needs {datum.rank}")
    return Weight(value)


def _weight_entry(weight: Weight) -> Dict[str, Any]:
    return {"weight": format_weight(weight.coords), "coords": weight.to_list()}


def _insertions(job: Dict[str, Any], datum: RootDatum) -> Dict[str, Weight]:
    raw = job.get("insertions", {})
    if not isinstance(raw, dict):
        raise ValidationError("insertions must be an object {label: [ints]}")
    return {str(label): _weight(value, datum, f"insertion at {label!r}") for label, value in raw.items()}


def _parahoric(job: Dict[str, Any], datum: RootDatum) -> ParahoricDatum:
    return ParahoricDatum.from_json(datum, job.get("points", []), genus=job.get("genus", 0),
                                    level=job.get("level"))


def run_root_data(job: Dict[str, Any], datum: RootDatum) -> Dict[str, Any]:
    """Cartan data, comarks, marks and h^vee"""
    return {
        "cartan": tagged("cartan", [list(row) for row in datum.cartan]),
        "theta": tagged("theta", datum.theta.to_list()),
        "comarks": tagged("comarks", list(datum.comarks)),
        "marks": tagged("marks", list(datum.marks)),
        "dual_coxeter_number": tagged("dual_coxeter_number", datum.dual_coxeter_number),
        "coxeter_number": tagged("coxeter_number", datum.coxeter_number),
        "positive_roots": tagged("positive_roots", len(datum.positive_roots)),
    }


def run_facets(job: Dict[str, Any], datum: RootDatum) -> Dict[str, Any]:
    """Every facet of the alcove with l(F) and its Levi"""
    facets = []
    for facet in enumerate_facets(datum):
        summary = facet_summary(datum, facet)
        facets.append({
            "facet": tagged("facet", summary["facet"]),
            "dimension": tagged("facet_dimension", summary["dimension"]),
            "l_of_facet": tagged("l_of_facet", summary["l_of_facet"]),
            "levi_nodes": tagged("levi_nodes", summary["levi_nodes"]),
            "levi_positive_roots": tagged("levi_positive_roots", summary["levi_positive_roots"]),
            "character_rank": tagged("character_rank", summary["character_rank"]),
            "special_by_mark": summary["special_by_mark"],
            "special_by_comark": summary["special_by_comark"],
        })
    return {"facets": facets}


def run_levels(job: Dict[str, Any], datum: RootDatum) -> Dict[str, Any]:
    """l(F_x) per point and ell"""
    parahoric = _parahoric(job, datum)
    return {
        "l_of_facet": {p.label: tagged("l_of_facet", l_of_facet(datum, p.facet)) for p in parahoric.points},
        "ell": tagged("ell", ell_of_datum(parahoric)),
    }


def run_weights(job: Dict[str, Any], datum: RootDatum) -> Dict[str, Any]:
    """P_c, or P_c^F when a facet is given"""
    level = job["level"]
    if "facet" in job:
        weights = enumerate_P_c_F(datum, level, Facet.from_json(job["facet"]))
    else:
        weights = enumerate_P_c(datum, level)
    return {
        "weights": tagged("weights", [format_weight(w.coords) for w in weights]),
        "coords": tagged("weights", [w.to_list() for w in weights]),
        "count": tagged("weights", len(weights)),
    }


def run_picard(job: Dict[str, Any], datum: RootDatum) -> Dict[str, Any]:
    """Picard lattice, plus the pullback splitting of a bundle when one is given"""
    parahoric = _parahoric(job, datum)
    free_rank, charge_index = pic_lattice(parahoric)
    report = {
        "free_rank": tagged("free_rank", free_rank),
        "charge_index": tagged("charge_index", charge_index),
    }
    if "bundle" in job:
        power, characters = decompose_pullback(parahoric, StackLineBundle.from_json(job["bundle"]))
        report["faltings_power"] = tagged("faltings_power", power)
        report["characters"] = tagged("characters", {label: _weight_entry(w) for label, w in characters.items()})
    return report


def run_descend(job: Dict[str, Any], datum: RootDatum) -> Dict[str, Any]:
    """Descent criterion for a tuple of Iwahori-level bundles"""
    parahoric = _parahoric(job, datum)
    bundles = job["bundles"]
    if not isinstance(bundles, dict) or not all(
            isinstance(v, list) and all(_is_int(n) for n in v) for v in bundles.values()):
        raise ValidationError("bundles must be an object {label: [ints]}")
    result = descends(parahoric, bundles)
    return {
        "descends": tagged("descends", result["descends"]),
        "reason": result["reason"],
        "charges": tagged("central_charge", result["charges"]),
        "ell": tagged("ell", result["ell"]),
    }


def run_fusion(job: Dict[str, Any], datum: RootDatum) -> Dict[str, Any]:
    """One fusion coefficient, or the whole product lambda x mu"""
    table = get_fusion_table(datum, job["level"])
    lam = _weight(job["lambda"], datum, "lambda")
    mu = _weight(job["mu"], datum, "mu")
    if "nu" in job:
        nu = _weight(job["nu"], datum, "nu")
        report = {"fusion": tagged("fusion", fusion_coeff(table, lam, mu, nu))}
    else:
        row = fusion_product(table, lam, mu)
        entries = [{**_weight_entry(nu), "multiplicity": n} for nu, n in sorted(row.items())]
        report = {"fusion": tagged("fusion", entries)}
    table.save()
    return report


def run_verlinde(job: Dict[str, Any], datum: RootDatum) -> Dict[str, Any]:
    """Dimension of the space of vacua, optionally confirmed by the S-matrix oracle"""
    parahoric = _parahoric(job, datum)
    insertions = _insertions(job, datum)
    if job.get("oracle", False):
        dim = cross_check_verlinde(parahoric, insertions)
    else:
        dim = verlinde_dim(parahoric, insertions)
    return {"dim": tagged("dim", dim)}


def run_propagate(job: Dict[str, Any], datum: RootDatum) -> Dict[str, Any]:
    """Dimension after adjoining a trivially labelled point"""
    parahoric = _parahoric(job, datum)
    insertions = _insertions(job, datum)
    new_point = job["new_point"]
    if not isinstance(new_point, dict) or set(new_point) != {"label", "facet"}:
        raise ValidationError('new_point must be {"label": str, "facet": [ints]}')
    value = propagate(parahoric, insertions, (str(new_point["label"]), Facet.from_json(new_point["facet"])))
    return {
        "dim": tagged("dim", verlinde_dim(parahoric, insertions)),
        "propagated_dim": tagged("propagated_dim", value),
    }


def run_hecke(job: Dict[str, Any], datum: RootDatum) -> Dict[str, Any]:
    """Dimensions before and after the Hecke transform at one point"""
    parahoric = _parahoric(job, datum)
    result = hecke_transform(parahoric, _insertions(job, datum), str(job["point"]))
    return {
        "dim": tagged("dim", result["parahoric_dim"]),
        "hecke_dim": tagged("hecke_dim", result["hecke_dim"]),
    }


def run_bwb(job: Dict[str, Any], datum: RootDatum) -> Dict[str, Any]:
    """b_pi, b_h and the Levi data per marking"""
    markings = []
    raw = job["markings"]
    if not isinstance(raw, list):
        raise ValidationError("markings must be a list")
    for index, entry in enumerate(raw):
        if not isinstance(entry, dict) or not {"label", "facet", "weight"} <= set(entry) <= \
                {"label", "facet", "weight", "boundary"}:
            raise ValidationError(f"markings[{index}] needs label, facet, weight and optionally boundary")
        boundary = _weight(entry["boundary"], datum, f"boundary at {entry['label']!r}") if "boundary" in entry else None
        markings.append(Marking(str(entry["label"]), Facet.from_json(entry["facet"]),
                                _weight(entry["weight"], datum, f"weight at {entry['label']!r}"), boundary))
    report = bwb_report(BwbInput(datum, tuple(markings), job.get("twist", 0)))
    return {name: tagged(name, value) for name, value in report.items()}


COMMANDS: Dict[str, Callable[[Dict[str, Any], RootDatum], Dict[str, Any]]] = {
    "root-data": run_root_data,
    "facets": run_facets,
    "levels": run_levels,
    "weights": run_weights,
    "picard": run_picard,
    "descend": run_descend,
    "fusion": run_fusion,
    "verlinde": run_verlinde,
    "propagate": run_propagate,
    "hecke": run_hecke,
    "bwb": run_bwb,
}


def format_human(report: Dict[str, Any]) -> str:
    """Render a report as 'name: value  [tag]' lines"""
    lines = [f"{report['command']} for {report['type']}{report['rank']}"]
    if "error" in report:
        lines.append(f"error ({report['error']['kind']}): {report['error']['message']}")
        return "\n".join(lines)
    for name, value in report["results"].items():
        if isinstance(value, dict) and set(value) == {"value", "tag"}:
            lines.append(f"  {name}: {json.dumps(value['value'], ensure_ascii=False, sort_keys=True)}  [{value['tag']}]")
        else:
            lines.append(f"  {name}: {json.dumps(value, ensure_ascii=False, sort_keys=True)}")
    return "\n".join(lines)


def run(job: Any, output_mode: str = "human") -> Tuple[int, str]:
    """Validate and execute one job; returns (exit status, rendered report)"""
    validation = JobSpecValidator.validate(job)
    header = {
        "schema_version": SCHEMA_VERSION,
        "command": job.get("command") if isinstance(job, dict) else None,
        "type": job.get("type") if isinstance(job, dict) else None,
        "rank": job.get("rank") if isinstance(job, dict) else None,
    }

    if not validation["valid"]:
        status = EXIT_USER_ERROR
        report = {**header, "error": {"kind": "user", "message": "; ".join(validation["errors"])}}
    else:
        logger.log_job_start(job["command"], f"{job['type']}{job['rank']}")
        try:
            datum = build_root_datum(job["type"], job["rank"])
            results = COMMANDS[job["command"]](job, datum)
            status = EXIT_OK
            report = {**header, "results": results}
        except ValidationError as e:
            logger.logger.error(f"❌ {e}")
            status = EXIT_USER_ERROR
            report = {**header, "error": {"kind": "user", "message": str(e)}}
        except (OracleDisagreementError, ArithmeticError) as e:
            logger.logger.error(f"❌ Internal consistency failure: {e}")
            status = EXIT_INTERNAL_ERROR
            report = {**header, "error": {"kind": "internal", "message": str(e)}}

    rendered = format_json_response(report) if output_mode == "json" else format_human(report)
    return status, rendered


def load_job(path: str) -> Any:
    """Read a JSON job from a file or stdin"""
    try:
        if path == "-":
            return json.load(sys.stdin)
        with open(path, "r", encoding="utf-8") as f:
            return json.load(f)
    except (OSError, ValueError) as e:
        raise ValidationError(f"Could not read job {path}: {e}")


def run_seed_check(args) -> Dict[str, Any]:
    """Run the built-in oracle suite"""
    from test_suite import OracleTestSuite

    logger.logger.info("🚀 Starting oracle suite...")
    results = OracleTestSuite().run_comprehensive_test()

    if args.output:
        with open(args.output, 'w') as f:
            json.dump(results, f, indent=2)
        logger.logger.info(f"📁 Results saved to: {args.output}")

    return results


def main():
    """Main function"""
    parser = create_argument_parser()
    args = parser.parse_args()

    if args.quiet:
        logger.set_level("ERROR")
    elif args.verbose:
        logger.set_level("DEBUG")

    config.set_cache(cache_dir=args.cache_dir, no_cache=True if args.no_cache else None)

    if not args.quiet and not args.json:
        print_banner()

    if args.seed_check:
        results = run_seed_check(args)
        sys.exit(EXIT_OK if results["overall_success"] else EXIT_INTERNAL_ERROR)

    if not args.input:
        parser.print_help()
        sys.exit(EXIT_USER_ERROR)

    try:
        job = load_job(args.input)
    except ValidationError as e:
        logger.logger.error(f"❌ {e}")
        sys.exit(EXIT_USER_ERROR)

    status, rendered = run(job, "json" if args.json else "human")

    if args.output:
        with open(args.output, 'w', encoding="utf-8") as f:
            f.write(rendered + "\n")
        logger.logger.info(f"📁 Report saved to: {args.output}")
    else:
        print(rendered)

    sys.exit(status)


if __name__ == "__main__":
    main()
