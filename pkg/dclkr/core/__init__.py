"""Core numerical library and CLI orchestration."""
from dclkr.core.app import BenchApp
from dclkr.core.errors import AcceptanceError, ConfigError, CoverageError, DclkrError, DegenerateInputError
from dclkr.core.kernels import KernelSpec, KernelVariant, RkhsFunction
from dclkr.core.dataset import PartyDataset

__all__ = [
    'BenchApp',
    'AcceptanceError',
    'ConfigError',
    'CoverageError',
    'DclkrError',
    'DegenerateInputError',
    'KernelSpec',
    'KernelVariant',
    'RkhsFunction',
    'PartyDataset',
]
