"""
Dataset directories: nodes.csv, elements.csv, boundary.csv, inputs.csv,
solutions.csv and manifest.json.
"""
import json
import logging
import os
from typing import Any, Dict, Optional

import numpy as np

from config.settings import GENERATOR_VERSION
from src.core.exceptions import MeshValidityError, ValidationError
from src.data.csv_io import read_matrix, write_matrix
from src.fem.dataset import PoissonDataset
from src.fem.mesh import TriMesh

logger = logging.getLogger(__name__)

NODES_FILE = "nodes.csv"
ELEMENTS_FILE = "elements.csv"
BOUNDARY_FILE = "boundary.csv"
INPUTS_FILE = "inputs.csv"
SOLUTIONS_FILE = "solutions.csv"
MANIFEST_FILE = "manifest.json"


def write_dataset(directory: str, dataset: PoissonDataset, seed: int = 0, header: bool = False) -> Dict[str, Any]:
    """Writes the five CSVs and the manifest; returns the manifest."""
    os.makedirs(directory, exist_ok=True)
    mesh = dataset.mesh
    n, p = dataset.inputs.shape

    def head(*names):
        return list(names) if header else None

    write_matrix(os.path.join(directory, NODES_FILE), mesh.nodes, head("s1", "s2"))
    write_matrix(os.path.join(directory, ELEMENTS_FILE), mesh.elements,
                 head("v1", "v2", "v3", "m12", "m23", "m13"), fmt="%d")
    write_matrix(os.path.join(directory, BOUNDARY_FILE), mesh.boundary_mask, head("boundary"))
    write_matrix(os.path.join(directory, INPUTS_FILE), dataset.inputs, head(*[f"x{i + 1}" for i in range(p)]))
    write_matrix(os.path.join(directory, SOLUTIONS_FILE), dataset.solutions, head(*[f"u{i + 1}" for i in range(n)]))
    manifest = {
        "h": mesh.mesh_size,
        "n": n,
        "N": mesh.n_nodes,
        "seed": int(seed),
        "generator_version": GENERATOR_VERSION,
        "analytic_available": dataset.analytic_available,
    }
    with open(os.path.join(directory, MANIFEST_FILE), "w") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
        f.write("\n")
    logger.info("Dataset written to %s (N=%d, n=%d)", directory, mesh.n_nodes, n)
    return manifest


def read_manifest(directory: str) -> Optional[Dict[str, Any]]:
    path = os.path.join(directory, MANIFEST_FILE)
    if not os.path.exists(path):
        return None
    try:
        with open(path, "r") as f:
            return json.load(f)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"malformed manifest: {exc}", path=path) from exc


def read_dataset(directory: str) -> PoissonDataset:
    """
    Loads and cross-checks a dataset directory.

    Raises:
        ValidationError: Naming the first file whose shape disagrees with
            nodes.csv or inputs.csv.
    """
    if not os.path.isdir(directory):
        raise ValidationError("dataset directory not found", path=directory)
    nodes = read_matrix(os.path.join(directory, NODES_FILE), columns=2)
    N = nodes.shape[0]
    elements_path = os.path.join(directory, ELEMENTS_FILE)
    elements = read_matrix(elements_path, columns=6, dtype=int)
    if elements.min() < 0 or elements.max() >= N:
        raise ValidationError(f"element indices must lie in [0, {N})", path=elements_path)
    boundary = read_matrix(os.path.join(directory, BOUNDARY_FILE), columns=1, rows=N, dtype=bool)[:, 0]
    inputs = read_matrix(os.path.join(directory, INPUTS_FILE))
    solutions = read_matrix(os.path.join(directory, SOLUTIONS_FILE), columns=inputs.shape[0], rows=N)

    manifest = read_manifest(directory) or {}
    manifest_path = os.path.join(directory, MANIFEST_FILE)
    if manifest and (manifest.get("N") != N or manifest.get("n") != inputs.shape[0]):
        raise ValidationError(f"manifest sizes (N={manifest.get('N')}, n={manifest.get('n')}) "
                              f"do not match the CSVs (N={N}, n={inputs.shape[0]})", path=manifest_path)
    try:
        mesh = TriMesh(nodes=nodes, elements=elements, boundary_mask=boundary,
                       mesh_size=float(manifest.get("h", np.nan)))
    except MeshValidityError as exc:
        raise ValidationError(str(exc), path=elements_path) from exc
    return PoissonDataset(mesh=mesh, inputs=inputs, solutions=solutions,
                          analytic_available=bool(manifest.get("analytic_available", False)))
