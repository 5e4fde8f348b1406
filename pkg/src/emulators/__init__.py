"""
Emulators Package - Auto-registers all emulators with the factory.

Importing this package loads every emulator module, triggering their
@register_emulator decorators.
"""

# Import all emulators to trigger registration
from src.emulators.mcgp import FittedEmulator
from src.emulators.ugp import SharedLengthscaleGP
from src.emulators.igp import IndependentGP
from src.emulators.pcagp import PcaGP

__all__ = ["FittedEmulator", "SharedLengthscaleGP", "IndependentGP", "PcaGP"]
