"""
Convergence study: generate -> fit -> field error over a grid of design
sizes and mesh sizes, followed by the rate regression.
"""
import logging
from dataclasses import asdict, dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np

from config.settings import CONVERGENCE_DESIGN_SIZES, CONVERGENCE_MESH_SIZES, INPUT_RANGE, MC_SAMPLES, SEED
from src.core.config_types import FitConfig, StudyConfig
from src.core.exceptions import InvalidArgumentError
from src.core.factory import EmulatorFactory
from src.core.interfaces import Emulator
from src.fem.dataset import PoissonDataset, generate_dataset
from src.fem.mesh import build_mesh
from src.fem.poisson import analytic_solution, l2_error
from src.metrics.convergence import RegressionResult, convergence_regression, monte_carlo_l2_error
from src.utils.performance import Stopwatch

logger = logging.getLogger(__name__)

Fitter = Callable[[str, np.ndarray, np.ndarray, Optional[np.ndarray], Optional[FitConfig]], Emulator]


@dataclass
class ConvergenceCell:
    """One (design size, mesh size) run."""
    n: int
    h: float
    h_x: float              # Design spacing (range)/(n-1)
    h_t: float              # Cell pitch of the generated mesh
    error: float            # Monte Carlo L2 error of the emulated field
    fem_error: float        # L2 error of the FEM solutions themselves, over the design
    fit_seconds: float
    converged: bool


@dataclass
class ConvergenceReport:
    cells: List[ConvergenceCell] = field(default_factory=list)
    regression: Optional[RegressionResult] = None

    def grid(self) -> np.ndarray:
        """(cells, 3) rows of (h_X, h_T, error)."""
        return np.array([[c.h_x, c.h_t, c.error] for c in self.cells], dtype=float).reshape(-1, 3)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "cells": [asdict(c) for c in self.cells],
            "regression": self.regression.to_dict() if self.regression else None,
        }


def design_inputs(n: int) -> np.ndarray:
    """n equispaced inputs including both ends of the input range."""
    if n < 2:
        raise InvalidArgumentError(f"design size must be >= 2, got {n}")
    return np.linspace(*INPUT_RANGE, n).reshape(-1, 1)


def fem_l2_error(dataset: PoissonDataset) -> float:
    """Root of |X| times the mean squared FEM L2 error over the dataset inputs."""
    mesh = dataset.mesh
    sq = [
        l2_error(mesh, dataset.solutions[:, i], lambda s, x=float(x): analytic_solution(s, x)) ** 2
        for i, x in enumerate(dataset.inputs[:, 0])
    ]
    volume = INPUT_RANGE[1] - INPUT_RANGE[0]
    return float(np.sqrt(volume * np.mean(sq)))


class ConvergenceStudy:
    """
    Runs the emulator pipeline on every grid cell and fits the error model.

    The mesh is built once per mesh size and shared by every design size.
    """

    def __init__(self, design_sizes: Sequence[int] = CONVERGENCE_DESIGN_SIZES,
                 mesh_sizes: Sequence[float] = CONVERGENCE_MESH_SIZES,
                 model_type: str = "mcgp", fit_config: Optional[FitConfig] = None,
                 mc_samples: int = MC_SAMPLES, seed: int = SEED,
                 fitter: Optional[Fitter] = None):
        # Config
        self.design_sizes = [int(n) for n in design_sizes]
        self.mesh_sizes = [float(h) for h in mesh_sizes]
        self.model_type = model_type
        self.fit_config: FitConfig = dict(fit_config or {})
        self.mc_samples = int(mc_samples)
        self.seed = int(seed)
        if len(self.design_sizes) * len(self.mesh_sizes) < 4:
            raise InvalidArgumentError("the convergence grid needs at least 4 cells")

        # Injected collaborator (defaults to the registry factory)
        self.fitter: Fitter = fitter or EmulatorFactory.fit

        logger.info("ConvergenceStudy created: %s on %d x %d grid", model_type,
                    len(self.design_sizes), len(self.mesh_sizes))

    @classmethod
    def from_config(cls, config: Optional[StudyConfig], fit_config: Optional[FitConfig] = None,
                    seed: int = SEED) -> "ConvergenceStudy":
        config = config or {}
        return cls(design_sizes=config.get("design_sizes", CONVERGENCE_DESIGN_SIZES),
                   mesh_sizes=config.get("mesh_sizes", CONVERGENCE_MESH_SIZES),
                   model_type=config.get("model_type", "mcgp"), fit_config=fit_config,
                   mc_samples=config.get("mc_samples", MC_SAMPLES), seed=seed)

    def run_cell(self, dataset: PoissonDataset) -> ConvergenceCell:
        mesh = dataset.mesh
        with Stopwatch() as sw:
            model = self.fitter(self.model_type, dataset.solutions, dataset.inputs, mesh.nodes, self.fit_config)
        error = monte_carlo_l2_error(model, mesh, samples=self.mc_samples, seed=self.seed)
        cell = ConvergenceCell(
            n=dataset.n_inputs, h=mesh.mesh_size, h_x=(INPUT_RANGE[1] - INPUT_RANGE[0]) / (dataset.n_inputs - 1),
            h_t=mesh.pitch, error=error, fem_error=fem_l2_error(dataset), fit_seconds=sw.elapsed,
            converged=bool(getattr(model, "converged", True)),
        )
        logger.info("n=%d h=%.4g: error %.4e (FEM %.4e), fit %.2fs", cell.n, cell.h, cell.error,
                    cell.fem_error, cell.fit_seconds)
        return cell

    def run(self) -> ConvergenceReport:
        report = ConvergenceReport()
        for h in self.mesh_sizes:
            mesh = build_mesh(h)
            for n in self.design_sizes:
                dataset = generate_dataset(h, design_inputs(n), mesh=mesh)
                report.cells.append(self.run_cell(dataset))
        grid = report.grid()
        report.regression = convergence_regression(grid[:, 0], grid[:, 1], grid[:, 2])
        return report
