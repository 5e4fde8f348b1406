"""
RunConfig - validated fitting configuration for the CLI.

Values are merged with the precedence CLI flags > JSON config file >
config.settings defaults; unknown keys are rejected.
"""
import json
import os
from typing import Any, Dict, Optional

import pydantic
from pydantic import BaseModel, ConfigDict, Field, field_validator

from config import settings
from src.core.config_types import FitConfig
from src.core.exceptions import InvalidArgumentError, ValidationError
from src.core.factory import EmulatorFactory


class PriorConfig(BaseModel):
    """Hyperprior overrides; unset fields keep the data-driven defaults."""
    model_config = ConfigDict(extra="forbid")

    alpha0: float = Field(default=settings.ALPHA0, gt=0.0)
    K: int = Field(default=settings.TRUNCATION_LEVEL, ge=1)
    kappa0: Optional[float] = Field(default=None, gt=0.0)


class RunConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", protected_namespaces=())

    seed: int = Field(default=settings.SEED, ge=0)
    nugget: float = Field(default=settings.NUGGET, gt=0.0)
    elbo_tol: float = Field(default=settings.ELBO_TOL, gt=0.0)
    max_iter: int = Field(default=settings.MAX_ITER, ge=1)
    multistarts: int = Field(default=settings.MULTISTARTS, ge=1)
    max_evals: int = Field(default=settings.MAX_EVALS, ge=1)
    model_type: str = "mcgp"
    literal_tau_exponent: bool = settings.LITERAL_TAU_EXPONENT
    tau_sq_floor: float = Field(default=settings.TAU_SQ_FLOOR, gt=0.0)
    pca_threshold: float = Field(default=settings.PCA_VARIANCE_THRESHOLD, gt=0.0, le=1.0)
    init_clusters: int = Field(default=settings.INIT_CLUSTERS, ge=1)
    priors: PriorConfig = Field(default_factory=PriorConfig)

    @field_validator("model_type")
    @classmethod
    def known_model_type(cls, value: str) -> str:
        value = value.lower()
        available = EmulatorFactory.get_available_emulators()
        if available and value not in available:
            raise ValueError(f"unknown model_type '{value}', available: {', '.join(available)}")
        return value

    @classmethod
    def load(cls, config_path: Optional[str] = None, overrides: Optional[Dict[str, Any]] = None) -> "RunConfig":
        """
        Builds a RunConfig from an optional JSON file and CLI overrides.

        None-valued overrides are ignored; the "priors" entry is merged key by key.

        Raises:
            ValidationError: If the config file is missing or not valid JSON.
            InvalidArgumentError: If a value is out of range or a key is unknown.
        """
        data: Dict[str, Any] = {}
        if config_path:
            if not os.path.exists(config_path):
                raise ValidationError("config file not found", path=config_path)
            try:
                with open(config_path, "r") as f:
                    data = json.load(f)
            except json.JSONDecodeError as exc:
                raise ValidationError(f"malformed config: {exc}", path=config_path) from exc
            if not isinstance(data, dict):
                raise ValidationError("config must be a JSON object", path=config_path)

        for key, value in (overrides or {}).items():
            if value is None:
                continue
            if key == "priors":
                merged = dict(data.get("priors") or {})
                merged.update({k: v for k, v in value.items() if v is not None})
                data["priors"] = merged
            else:
                data[key] = value
        try:
            return cls.model_validate(data)
        except pydantic.ValidationError as exc:
            raise InvalidArgumentError(f"invalid configuration: {exc}") from exc

    def to_fit_config(self) -> FitConfig:
        priors = {"alpha0": self.priors.alpha0, "K": self.priors.K}
        if self.priors.kappa0 is not None:
            priors["kappa0"] = self.priors.kappa0
        return FitConfig(
            seed=self.seed,
            nugget=self.nugget,
            elbo_tol=self.elbo_tol,
            max_iter=self.max_iter,
            optimizer={"multistarts": self.multistarts, "max_evals": self.max_evals},
            priors=priors,
            literal_tau_exponent=self.literal_tau_exponent,
            tau_sq_floor=self.tau_sq_floor,
            pca_threshold=self.pca_threshold,
            init_clusters=self.init_clusters,
        )
