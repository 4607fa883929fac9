# -*- coding: utf-8 -*-

"""Core library of platestruct.

Enums, exceptions and the result base classes shared by all modules of the
plate structure toolkit.

"""

from __future__ import annotations
from abc import ABC
from dataclasses import dataclass
from enum import Enum, auto
from typing import Type

import numpy as np

from platestruct.helper import get_logger

# Initialize global logger
logger = get_logger(__name__)


# Enums
class EstimateStatus(Enum):
    OK = auto()
    EXACT_KERNEL = auto()
    VIOLATION = auto()


class EpdTypes(Enum):
    FIBER = auto()
    BALL = auto()
    BLENDED = auto()


# Exceptions
class PlateStructError(Exception):
    pass


class GeometryError(PlateStructError):
    pass


class HypothesisError(PlateStructError):
    pass


class MaterialError(PlateStructError):
    pass


class MeshError(PlateStructError):
    pass


class DecompositionError(PlateStructError):
    pass


class SpaceError(PlateStructError):
    pass


class AdmissibilityError(PlateStructError):
    pass


class SolverError(PlateStructError):
    pass


class ConfigError(PlateStructError):
    pass


class EmptyRegionWarning(UserWarning):
    pass


# Result classes
class BaseResultClass(ABC):
    ...


@dataclass
class SolverResult(BaseResultClass):
    success: bool
    status: np.int8
    message: str
    residual: np.float64
    nit: np.int32

    @classmethod
    def from_success(
        cls: Type[SolverResult], residual: float, nit: int = 0
    ) -> SolverResult:
        return cls(
            success=True,
            status=np.int8(0),
            message="Solver finished successfully.",
            residual=np.float64(residual),
            nit=np.int32(nit),
        )

    @classmethod
    def from_convergence(
        cls: Type[SolverResult], residual: float, nit: int = 0
    ) -> SolverResult:
        return cls(
            success=False,
            status=np.int8(1),
            message="Solver didn't converge successfully.",
            residual=np.float64(residual),
            nit=np.int32(nit),
        )

    @classmethod
    def from_error(cls: Type[SolverResult], message: str) -> SolverResult:
        return cls(
            success=False,
            status=np.int8(2),
            message=message,
            residual=np.float64(np.nan),
            nit=np.int32(0),
        )


if __name__ == "__main__":
    logger.info("This is the core file of the platestruct library.")
