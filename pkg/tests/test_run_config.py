"""
Unit Tests for RunConfig and the emulator registry.

Run with: python -m pytest tests/test_run_config.py -v
"""
import unittest
import sys
import os
import json
import tempfile

# Add project root to path
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from config import settings
from src.cli.run_config import RunConfig
from src.core.exceptions import EmulatorNotFoundError, InvalidArgumentError, ValidationError
from src.core.factory import EmulatorFactory
from src.core.registry import get_emulator_class


class TestRunConfig(unittest.TestCase):
    """Test config precedence and validation."""

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.path = os.path.join(self.tmp.name, "config.json")

    def tearDown(self):
        self.tmp.cleanup()

    def _write(self, data):
        with open(self.path, "w") as f:
            json.dump(data, f)

    def test_defaults(self):
        config = RunConfig.load()
        self.assertEqual(config.model_type, "mcgp")
        self.assertEqual(config.priors.K, settings.TRUNCATION_LEVEL)
        self.assertEqual(config.priors.alpha0, settings.ALPHA0)
        self.assertIsNone(config.priors.kappa0)

    def test_flags_override_file(self):
        self._write({"seed": 4, "max_iter": 30, "priors": {"K": 6, "alpha0": 2.0}})
        config = RunConfig.load(self.path, {"seed": 9, "max_iter": None, "priors": {"K": 3, "alpha0": None}})
        self.assertEqual(config.seed, 9)
        self.assertEqual(config.max_iter, 30)
        self.assertEqual(config.priors.K, 3)
        self.assertEqual(config.priors.alpha0, 2.0)

    def test_to_fit_config(self):
        config = RunConfig.load(overrides={"multistarts": 2, "max_evals": 50, "priors": {"kappa0": 4.0}})
        fit = config.to_fit_config()
        self.assertEqual(fit["optimizer"], {"multistarts": 2, "max_evals": 50})
        self.assertEqual(fit["priors"]["kappa0"], 4.0)
        self.assertNotIn("kappa0", RunConfig.load().to_fit_config()["priors"])
        self.assertEqual(fit["init_clusters"], settings.INIT_CLUSTERS)
        self.assertEqual(RunConfig.load(overrides={"init_clusters": 2}).to_fit_config()["init_clusters"], 2)

    def test_model_type_normalized(self):
        self.assertEqual(RunConfig.load(overrides={"model_type": "PcaGP"}).model_type, "pcagp")

    def test_invalid_values(self):
        for overrides in ({"model_type": "nope"}, {"nugget": -1.0}, {"priors": {"K": 0}},
                          {"pca_threshold": 1.5}, {"init_clusters": 0}, {"unknown_key": 1}):
            with self.assertRaises(InvalidArgumentError, msg=str(overrides)):
                RunConfig.load(overrides=overrides)

    def test_bad_files(self):
        with self.assertRaises(ValidationError):
            RunConfig.load(self.path)
        with open(self.path, "w") as f:
            f.write("{")
        with self.assertRaises(ValidationError):
            RunConfig.load(self.path)
        self._write([1, 2])
        with self.assertRaises(ValidationError):
            RunConfig.load(self.path)


class TestRegistry(unittest.TestCase):
    """Test the emulator registry."""

    def test_all_model_types_registered(self):
        self.assertEqual(EmulatorFactory.get_available_emulators(), ["igp", "mcgp", "pcagp", "ugp"])

    def test_lookup_is_case_insensitive(self):
        self.assertIs(get_emulator_class("MCGP"), get_emulator_class("mcgp"))
        self.assertEqual(get_emulator_class("ugp").model_type, "ugp")

    def test_unknown_type(self):
        with self.assertRaises(EmulatorNotFoundError):
            get_emulator_class("kriging-deluxe")

    def test_sidecars(self):
        self.assertIn("responsibilities", EmulatorFactory.sidecar_names("mcgp"))


if __name__ == '__main__':
    unittest.main()
