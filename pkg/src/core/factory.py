"""
EmulatorFactory - Fits and rebuilds emulators by model-type tag.

Emulators self-register with @register_emulator; adding one needs a module
in src/emulators/ and an import in src/emulators/__init__.py.
"""
from typing import Any, Dict, List, Optional

import numpy as np

from src.core.config_types import FitConfig
from src.core.interfaces import Emulator
from src.core.registry import get_available_emulators, get_emulator_class

# IMPORTANT: Import emulators package to trigger registration
import src.emulators  # noqa: F401


class EmulatorFactory:
    """Factory for fitted emulators."""

    @staticmethod
    def fit(model_type: str, B: np.ndarray, X: np.ndarray, S: Optional[np.ndarray] = None,
            config: Optional[FitConfig] = None) -> Emulator:
        """
        Fits an emulator of the given type.

        Args:
            model_type: "mcgp", "ugp", "igp" or "pcagp"
            B: (N, n) node coefficients
            X: (n, p) design
            S: (N, d) node coordinates (used by mcgp)
            config: Fitting options

        Raises:
            EmulatorNotFoundError: If the type is not registered.
        """
        return get_emulator_class(model_type).fit(B, X, S, config)

    @staticmethod
    def from_payload(model_type: str, meta: Dict[str, Any], solutions: np.ndarray,
                     sidecars: Dict[str, np.ndarray]) -> Emulator:
        return get_emulator_class(model_type).from_payload(meta, solutions, sidecars)

    @staticmethod
    def sidecar_names(model_type: str) -> List[str]:
        return list(get_emulator_class(model_type).sidecar_names)

    @staticmethod
    def get_available_emulators() -> List[str]:
        return get_available_emulators()
