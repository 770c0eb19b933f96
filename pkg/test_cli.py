import unittest
import io
import json
import os
import tempfile
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from unittest.mock import patch

import main
from config import Config, config
from fusion import clear_fusion_tables
from logger_config import logger
from utils import (EQUATION_TAGS, EXIT_INTERNAL_ERROR, EXIT_OK, EXIT_USER_ERROR, JobSpecValidator,
                   OracleDisagreementError, format_json_response)

SOURCE_ROOT = os.path.dirname(os.path.abspath(__file__))
GOLDEN_DIR = os.path.join(SOURCE_ROOT, "goldens")


def _job(command, type_letter="A", rank=1, **fields):
    return {"schema_version": 1, "command": command, "type": type_letter, "rank": rank, **fields}


def _untagged_numbers(value, path="results"):
    """Paths of numeric leaves that are not wrapped in a {"value", "tag"} object"""
    if isinstance(value, dict):
        if set(value) == {"value", "tag"}:
            return []
        found = []
        for key, item in value.items():
            found.extend(_untagged_numbers(item, f"{path}.{key}"))
        return found
    if isinstance(value, list):
        found = []
        for index, item in enumerate(value):
            found.extend(_untagged_numbers(item, f"{path}[{index}]"))
        return found
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return [path]
    return []


class TestJobValidation(unittest.TestCase):
    """Test cases for job validation"""

    def test_valid_jobs(self):
        """Test minimal jobs for every command shape"""
        logger.log_test_start("Valid Jobs")

        jobs = [
            _job("root-data"),
            _job("weights", level=2),
            _job("verlinde", level=1, genus=2, oracle=True),
            _job("levels", points=[{"label": "x", "facet": [0, 1]}]),
        ]
        for job in jobs:
            result = JobSpecValidator.validate(job)
            self.assertTrue(result["valid"], result["errors"])

        logger.log_test_result("Valid Jobs", True, f"{len(jobs)} jobs accepted")

    def test_invalid_jobs(self):
        """Test each kind of malformed job"""
        logger.log_test_start("Invalid Jobs")

        cases = {
            "not an object": [1, 2],
            "unknown command": _job("volume"),
            "missing field": _job("fusion", level=1, mu=[0]),
            "unknown field": _job("root-data", level=1),
            "negative level": _job("weights", level=-1),
            "boolean genus": _job("verlinde", level=1, genus=True),
            "oracle not bool": _job("verlinde", level=1, genus=0, oracle="yes"),
            "schema version": {**_job("root-data"), "schema_version": 2},
            "rank not int": _job("root-data", rank="1"),
            "duplicate labels": _job("levels", points=[{"label": "x", "facet": [0]}, {"label": "x", "facet": [1]}]),
            "bad facet": _job("levels", points=[{"label": "x", "facet": "0"}]),
            "list label": _job("levels", points=[{"label": ["x"], "facet": [0]}]),
            "point not a label": _job("hecke", level=1, genus=0, points=[{"label": "x", "facet": [0]}], point=0),
        }
        for name, job in cases.items():
            result = JobSpecValidator.validate(job)
            self.assertFalse(result["valid"], name)
            self.assertTrue(result["errors"], name)

        logger.log_test_result("Invalid Jobs", True, f"{len(cases)} jobs rejected")


class TestRun(unittest.TestCase):
    """Test cases for running jobs end to end"""

    def setUp(self):
        patcher = patch.object(config, "NO_CACHE", True)
        patcher.start()
        self.addCleanup(patcher.stop)
        clear_fusion_tables()
        self.addCleanup(clear_fusion_tables)

    def _results(self, job):
        status, rendered = main.run(job, "json")
        self.assertEqual(status, EXIT_OK, rendered)
        return json.loads(rendered)["results"]

    def test_verlinde_job(self):
        """Test the A1 level 1 genus 2 dimension and its tag"""
        logger.log_test_start("Verlinde Job")

        results = self._results(_job("verlinde", level=1, genus=2))
        self.assertEqual(results["dim"], {"value": 4, "tag": "Cor SplitGamma=Verlinde"})
        results = self._results(_job("verlinde", level=1, genus=2, oracle=True))
        self.assertEqual(results["dim"]["value"], 4)

        logger.log_test_result("Verlinde Job", True, "dim = 4")

    def test_levels_and_weights_jobs(self):
        """Test ell and P_c reports"""
        logger.log_test_start("Levels And Weights Jobs")

        results = self._results(_job("levels", "A", 3, points=[{"label": "x", "facet": [2]},
                                                               {"label": "y", "facet": [2]}]))
        self.assertEqual(results["ell"], {"value": 1, "tag": "Eq. (f)"})
        results = self._results(_job("levels", "G", 2, points=[{"label": "x", "facet": [2]},
                                                               {"label": "y", "facet": [0]}]))
        self.assertEqual(results["ell"]["value"], 2)
        self.assertEqual(results["l_of_facet"]["x"]["value"], 2)

        results = self._results(_job("weights", level=2))
        self.assertEqual(results["weights"]["value"], ["0", "ω", "2ω"])
        results = self._results(_job("weights", "A", 2, level=2, facet=[1, 2]))
        self.assertEqual(results["coords"]["value"], [[0, 2], [1, 1], [2, 0]])

        logger.log_test_result("Levels And Weights Jobs", True, "tagged values")

    def test_every_number_is_tagged(self):
        """Test no numeric result leaves the CLI without its tag"""
        logger.log_test_start("Tagged Results")

        iwahori = [{"label": "x", "facet": [0, 1]}, {"label": "y", "facet": [0, 1]}]
        jobs = [
            _job("root-data", "G", 2),
            _job("facets", "B", 3),
            _job("levels", points=iwahori),
            _job("weights", level=3),
            _job("picard", points=iwahori[:1], bundle={"charge": 2, "points": {"x": [1, 1]}}),
            _job("descend", points=iwahori, bundles={"x": [1, 0], "y": [0, 1]}),
            _job("fusion", level=2, **{"lambda": [1], "mu": [1]}),
            _job("fusion", level=2, nu=[2], **{"lambda": [1], "mu": [1]}),
            _job("verlinde", level=1, genus=0, points=iwahori, insertions={"x": [1], "y": [1]}),
            _job("propagate", level=1, genus=0, points=iwahori, insertions={"x": [1], "y": [1]},
                 new_point={"label": "z", "facet": [0]}),
            _job("hecke", level=2, genus=0, points=[{"label": "x", "facet": [0, 1]}, {"label": "y", "facet": [1]}],
                 insertions={"x": [2], "y": [2]}, point="y"),
            _job("bwb", markings=[{"label": "x", "facet": [0], "weight": [-3]}], twist=1),
        ]
        for job in jobs:
            results = self._results(job)
            self.assertEqual(_untagged_numbers(results), [], job["command"])
            for value in results.values():
                if isinstance(value, dict) and "tag" in value:
                    self.assertIn(value["tag"], EQUATION_TAGS.values())

        logger.log_test_result("Tagged Results", True, f"{len(jobs)} commands")

    def test_command_values(self):
        """Test representative values through the CLI"""
        logger.log_test_start("Command Values")

        results = self._results(_job("picard", points=[{"label": "x", "facet": [0, 1]}],
                                     bundle={"charge": 2, "points": {"x": [1, 1]}}))
        self.assertEqual(results["free_rank"]["value"], 2)
        self.assertEqual(results["faltings_power"]["value"], 2)
        self.assertEqual(results["characters"]["value"], {"x": {"weight": "ω", "coords": [1]}})

        results = self._results(_job("descend", points=[{"label": "x", "facet": [0, 1]}, {"label": "y", "facet": [0]}],
                                     bundles={"x": [1, 0], "y": [2]}))
        self.assertFalse(results["descends"]["value"])
        self.assertTrue(results["reason"].startswith("unequal charges"))

        results = self._results(_job("hecke", level=2, genus=0,
                                     points=[{"label": "x", "facet": [0, 1]}, {"label": "y", "facet": [1]}],
                                     insertions={"x": [2], "y": [2]}, point="y"))
        self.assertEqual(results["dim"]["value"], 1)
        self.assertEqual(results["hecke_dim"]["value"], 1)

        results = self._results(_job("bwb", markings=[{"label": "x", "facet": [0], "weight": [-3]}]))
        self.assertEqual(results["b_pi"], {"value": 1, "tag": "Eq. (b1)"})

        logger.log_test_result("Command Values", True, "picard, descend, hecke, bwb")

    def test_deterministic_output(self):
        """Test two runs render byte-identical reports"""
        logger.log_test_start("Deterministic Output")

        job = _job("fusion", "A", 2, level=2, **{"lambda": [1, 0], "mu": [1, 1]})
        first = main.run(job, "json")
        clear_fusion_tables()
        second = main.run(job, "json")
        self.assertEqual(first, second)
        self.assertEqual(main.run(job, "human"), main.run(job, "human"))

        logger.log_test_result("Deterministic Output", True, "sorted keys")

    def test_user_errors(self):
        """Test exit status 2 for bad input"""
        logger.log_test_start("User Errors")

        jobs = [
            _job("volume"),
            _job("root-data", "Z", 3),
            _job("root-data", "E", 5),
            _job("weights", "G", 2, level=3, facet=[2]),
            _job("verlinde", level=1, genus=0, points=[{"label": "x", "facet": [0]}], insertions={"x": [1]}),
            _job("fusion", level=1, **{"lambda": [2], "mu": [0]}),
            _job("levels", points=[{"label": ["x"], "facet": [0]}]),
        ]
        for job in jobs:
            status, rendered = main.run(job, "json")
            self.assertEqual(status, EXIT_USER_ERROR, job)
            report = json.loads(rendered)
            self.assertEqual(report["error"]["kind"], "user")
            self.assertNotIn("results", report)

        status, rendered = main.run(jobs[4], "human")
        self.assertIn("error (user)", rendered)
        self.assertIn("'x'", rendered)

        logger.log_test_result("User Errors", True, f"{len(jobs)} jobs")

    def test_internal_error(self):
        """Test exit status 1 when an oracle check fails"""
        logger.log_test_start("Internal Error")

        with patch("main.verlinde_dim", side_effect=OracleDisagreementError("fusion and S-matrix disagree")):
            status, rendered = main.run(_job("verlinde", level=1, genus=1), "json")
        self.assertEqual(status, EXIT_INTERNAL_ERROR)
        self.assertEqual(json.loads(rendered)["error"],
                         {"kind": "internal", "message": "fusion and S-matrix disagree"})

        logger.log_test_result("Internal Error", True, "exit 1")

    def test_human_report(self):
        """Test the human rendering carries tags"""
        logger.log_test_start("Human Report")

        status, rendered = main.run(_job("verlinde", level=1, genus=2), "human")
        self.assertEqual(status, EXIT_OK)
        self.assertTrue(rendered.startswith("verlinde for A1"))
        self.assertIn("dim: 4  [Cor SplitGamma=Verlinde]", rendered)

        logger.log_test_result("Human Report", True, "name: value [tag]")

    def test_main_entry_point(self):
        """Test argv handling, stdout and exit codes"""
        logger.log_test_start("Main Entry Point")
        self.addCleanup(logger.set_level, config.LOG_LEVEL)

        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, "job.json")
            with open(path, "w", encoding="utf-8") as f:
                json.dump(_job("verlinde", level=1, genus=3), f)

            with patch.object(config, "CACHE_DIR", config.CACHE_DIR), \
                    patch("sys.argv", ["main.py", "--input", path, "--json", "--no-cache"]), \
                    patch("sys.stdout", new_callable=io.StringIO) as stdout:
                with self.assertRaises(SystemExit) as ctx:
                    main.main()
            self.assertEqual(ctx.exception.code, EXIT_OK)
            self.assertEqual(json.loads(stdout.getvalue())["results"]["dim"]["value"], 8)

            bad = os.path.join(tmp, "bad.json")
            with open(bad, "w", encoding="utf-8") as f:
                f.write("{")
            with patch("sys.argv", ["main.py", "--input", bad, "--quiet"]):
                with self.assertRaises(SystemExit) as ctx:
                    main.main()
            self.assertEqual(ctx.exception.code, EXIT_USER_ERROR)

        with patch("sys.argv", ["main.py", "--quiet"]), patch("sys.stdout", new_callable=io.StringIO):
            with self.assertRaises(SystemExit) as ctx:
                main.main()
        self.assertEqual(ctx.exception.code, EXIT_USER_ERROR)

        logger.log_test_result("Main Entry Point", True, "exit codes 0 and 2")


@unittest.skipUnless(os.path.isdir(GOLDEN_DIR), "goldens/ ships with the source tree only")
class TestGoldenReports(unittest.TestCase):
    """Test cases for the JSON reports stored under goldens/"""

    def setUp(self):
        clear_fusion_tables()
        self.addCleanup(clear_fusion_tables)
        self.goldens = {}
        for name in sorted(os.listdir(GOLDEN_DIR)):
            if name.endswith(".json"):
                with open(os.path.join(GOLDEN_DIR, name), "r", encoding="utf-8") as f:
                    self.goldens[name] = json.load(f)

    def test_every_command_has_a_golden(self):
        """Test the golden suite covers the whole command table"""
        logger.log_test_start("Golden Coverage")

        commands = {golden["job"]["command"] for golden in self.goldens.values()}
        self.assertEqual(commands, set(main.COMMANDS))

        logger.log_test_result("Golden Coverage", True, f"{len(commands)} commands")

    def test_reports_match_byte_for_byte(self):
        """Test repeated runs render exactly the stored report"""
        logger.log_test_start("Golden Reports")

        with patch.object(config, "NO_CACHE", True):
            for name, golden in self.goldens.items():
                expected = format_json_response(golden["report"])
                for _ in range(2):
                    status, rendered = main.run(golden["job"], "json")
                    self.assertEqual(status, EXIT_OK, name)
                    self.assertEqual(rendered, expected, name)
                    clear_fusion_tables()

        logger.log_test_result("Golden Reports", True, f"{len(self.goldens)} reports, two runs each")

    def test_cached_table_renders_the_same_report(self):
        """Test a fusion row read back from disk renders like a fresh one"""
        logger.log_test_start("Golden Report From Cache")

        golden = self.goldens["fusion.json"]
        expected = format_json_response(golden["report"])
        with tempfile.TemporaryDirectory() as tmp, \
                patch.object(config, "CACHE_DIR", tmp), patch.object(config, "NO_CACHE", False):
            cold = main.run(golden["job"], "json")
            self.assertTrue(os.listdir(tmp))
            clear_fusion_tables()
            warm = main.run(golden["job"], "json")
            clear_fusion_tables()
        self.assertEqual(cold, (EXIT_OK, expected))
        self.assertEqual(warm, (EXIT_OK, expected))

        logger.log_test_result("Golden Report From Cache", True, "cold and warm runs agree")


class TestConfig(unittest.TestCase):
    """Test cases for configuration loading"""

    def _config(self, **env):
        base = {"XDG_CACHE_HOME": "/tmp/xdg-cache"}
        with patch.dict(os.environ, {**base, **env}, clear=True):
            return Config()

    def test_defaults(self):
        """Test defaults with an empty environment"""
        logger.log_test_start("Config Defaults")

        loaded = self._config()
        self.assertEqual(loaded.get_cache_config(),
                         {"cache_dir": os.path.join("/tmp/xdg-cache", "parahoric-blocks"), "enabled": True})
        self.assertEqual(loaded.get_log_config(), {"log_level": "WARNING", "log_file": ""})
        self.assertEqual(loaded.get_oracle_config(), {"dps": 40, "tolerance": 1e-6})
        self.assertEqual(loaded.warnings, [])

        logger.log_test_result("Config Defaults", True, "XDG cache directory")

    def test_environment_overrides(self):
        """Test environment variables and their validation"""
        logger.log_test_start("Config Environment")

        loaded = self._config(PARAHORIC_CACHE_DIR="/srv/fusion", PARAHORIC_NO_CACHE="TRUE",
                              PARAHORIC_LOG_LEVEL="debug", PARAHORIC_SMATRIX_DPS="60")
        self.assertEqual(loaded.get_cache_config(), {"cache_dir": "/srv/fusion", "enabled": False})
        self.assertEqual(loaded.LOG_LEVEL, "DEBUG")
        self.assertEqual(loaded.get_oracle_config()["dps"], 60)

        clamped = self._config(PARAHORIC_SMATRIX_DPS="5", PARAHORIC_LOG_LEVEL="LOUD")
        self.assertEqual(clamped.SMATRIX_DPS, 20)
        self.assertEqual(clamped.LOG_LEVEL, "WARNING")
        self.assertEqual(len(clamped.warnings), 2)

        garbage = self._config(PARAHORIC_SMATRIX_DPS="many")
        self.assertEqual(garbage.SMATRIX_DPS, 40)
        self.assertEqual(len(garbage.warnings), 1)

        logger.log_test_result("Config Environment", True, "invalid values fall back")

    def test_ini_file(self):
        """Test the INI file and its precedence below the environment"""
        logger.log_test_start("Config INI File")

        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, "parahoric.ini")
            with open(path, "w", encoding="utf-8") as f:
                f.write("[parahoric]\ncache_dir = /ini/cache\nsmatrix_dps = 50\nno_cache = true\n")
            loaded = self._config(PARAHORIC_CONFIG=path)
            self.assertEqual(loaded.CACHE_DIR, "/ini/cache")
            self.assertEqual(loaded.SMATRIX_DPS, 50)
            self.assertTrue(loaded.NO_CACHE)
            overridden = self._config(PARAHORIC_CONFIG=path, PARAHORIC_SMATRIX_DPS="30")
            self.assertEqual(overridden.SMATRIX_DPS, 30)

        missing = self._config(PARAHORIC_CONFIG="/nonexistent/parahoric.ini")
        self.assertEqual(len(missing.warnings), 1)

        logger.log_test_result("Config INI File", True, "environment wins")

    def test_set_cache(self):
        """Test command-line cache overrides"""
        logger.log_test_start("Config Set Cache")

        loaded = self._config()
        loaded.set_cache(cache_dir="/run/cache")
        self.assertEqual(loaded.get_cache_config(), {"cache_dir": "/run/cache", "enabled": True})
        loaded.set_cache(no_cache=True)
        self.assertEqual(loaded.get_cache_config(), {"cache_dir": "/run/cache", "enabled": False})
        loaded.set_cache()
        self.assertFalse(loaded.get_cache_config()["enabled"])

        logger.log_test_result("Config Set Cache", True, "None leaves values alone")


@unittest.skipUnless(os.path.isfile(os.path.join(SOURCE_ROOT, "pyproject.toml")), "needs the source tree")
class TestPackaging(unittest.TestCase):
    """Test cases for the installed module list"""

    def test_seed_check_modules_are_installed(self):
        """Test every module the seed check imports is listed in pyproject.toml"""
        logger.log_test_start("Packaged Modules")

        with open(os.path.join(SOURCE_ROOT, "pyproject.toml"), "rb") as f:
            modules = set(tomllib.load(f)["tool"]["setuptools"]["py-modules"])
        local = {name[:-3] for name in os.listdir(SOURCE_ROOT)
                 if name.endswith(".py") and name != "example_usage.py"}
        self.assertEqual(local - modules, set())
        self.assertIn("test_suite", modules)

        logger.log_test_result("Packaged Modules", True, f"{len(modules)} modules")


if __name__ == "__main__":
    unittest.main()
