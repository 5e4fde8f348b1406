"""
Emulator Registry - Stores registered emulator classes.

This module is separate from factory.py to avoid circular imports.
Emulator classes register themselves by importing and using the decorator.
"""
from typing import Callable, Dict, List, Type

from src.core.interfaces import Emulator
from src.core.exceptions import EmulatorNotFoundError


_emulator_registry: Dict[str, Type[Emulator]] = {}


def register_emulator(name: str) -> Callable[[Type[Emulator]], Type[Emulator]]:
    """
    Decorator to register an emulator class under a model-type tag.

    Usage:
        @register_emulator("igp")
        class IndependentGP(Emulator):
            ...

    Args:
        name: Model-type tag (case-insensitive), also written to model.json.

    Returns:
        The decorator function.
    """
    def decorator(cls: Type[Emulator]) -> Type[Emulator]:
        cls.model_type = name.lower()
        _emulator_registry[name.lower()] = cls
        return cls
    return decorator


def get_emulator_class(name: str) -> Type[Emulator]:
    """
    Retrieves an emulator class by model-type tag.

    Raises:
        EmulatorNotFoundError: If the tag is not registered.
    """
    name_lower = name.lower()
    if name_lower not in _emulator_registry:
        available = ", ".join(sorted(_emulator_registry))
        raise EmulatorNotFoundError(
            f"Emulator '{name}' not registered. Available: [{available}]"
        )
    return _emulator_registry[name_lower]


def get_available_emulators() -> List[str]:
    """Returns the registered model-type tags."""
    return sorted(_emulator_registry)
