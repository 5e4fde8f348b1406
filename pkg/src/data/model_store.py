"""
Model directories: model.json plus solutions.csv and the model type's
sidecar matrices (responsibilities.csv for mcgp).

JSON floats use Python's shortest round-trip repr and CSV floats 17
significant digits, so a reloaded model predicts bit-for-bit identically.
"""
import json
import logging
import os
from typing import Any, Dict

from config.settings import MODEL_FORMAT_VERSION
from src.core.exceptions import EmulatorNotFoundError, InvalidArgumentError, ModelLoadError, ValidationError
from src.core.factory import EmulatorFactory
from src.core.interfaces import Emulator
from src.data.csv_io import read_matrix, write_matrix

logger = logging.getLogger(__name__)

MODEL_FILE = "model.json"
SOLUTIONS_FILE = "solutions.csv"


def save_model(model: Emulator, directory: str) -> str:
    """Writes the model files and returns the model.json path."""
    os.makedirs(directory, exist_ok=True)
    meta, sidecars = model.to_payload()
    document: Dict[str, Any] = {
        "format_version": MODEL_FORMAT_VERSION,
        "type": model.model_type,
        "n_nodes": model.n_nodes,
        "n_inputs": model.n_inputs,
        "input_dim": model.input_dim,
        "sidecars": sorted(sidecars),
        "meta": meta,
    }
    write_matrix(os.path.join(directory, SOLUTIONS_FILE), model.solutions)
    for name, matrix in sidecars.items():
        write_matrix(os.path.join(directory, f"{name}.csv"), matrix)
    path = os.path.join(directory, MODEL_FILE)
    with open(path, "w") as f:
        json.dump(document, f, indent=1, allow_nan=False)
        f.write("\n")
    logger.info("Saved %s model to %s", model.model_type, directory)
    return path


def load_model(directory: str) -> Emulator:
    """
    Rebuilds a saved model.

    Raises:
        ModelLoadError: Missing or malformed files, an unsupported format
            version, an unknown model type, or inconsistent shapes. No
            partially built model is returned.
    """
    path = os.path.join(directory, MODEL_FILE)
    try:
        with open(path, "r") as f:
            document = json.load(f)
    except FileNotFoundError as exc:
        raise ModelLoadError(f"{path}: model file not found") from exc
    except json.JSONDecodeError as exc:
        raise ModelLoadError(f"{path}: malformed model file: {exc}") from exc

    if not isinstance(document, dict):
        raise ModelLoadError(f"{path}: model file must hold a JSON object")
    version = document.get("format_version")
    if version != MODEL_FORMAT_VERSION:
        raise ModelLoadError(f"{path}: unsupported format version {version!r} (expected {MODEL_FORMAT_VERSION})")

    try:
        model_type = document["type"]
        N, n = int(document["n_nodes"]), int(document["n_inputs"])
        solutions = read_matrix(os.path.join(directory, SOLUTIONS_FILE), columns=n, rows=N)
        sidecars = {
            name: read_matrix(os.path.join(directory, f"{name}.csv"), rows=N)
            for name in EmulatorFactory.sidecar_names(model_type)
        }
        model = EmulatorFactory.from_payload(model_type, document["meta"], solutions, sidecars)
    except (KeyError, TypeError) as exc:
        raise ModelLoadError(f"{path}: missing or malformed field {exc}") from exc
    except (ValidationError, InvalidArgumentError, EmulatorNotFoundError, ValueError) as exc:
        raise ModelLoadError(f"{path}: {exc}") from exc
    logger.info("Loaded %s model from %s", model_type, directory)
    return model
