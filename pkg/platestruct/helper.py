# -*- coding: utf-8 -*-

"""Helper functions.

Logger factory, CSV writer and the smooth cutoff function shared by the
decomposition and recovery constructions.

"""

from __future__ import annotations

import logging.config
import os
from pathlib import Path
from typing import Any, List, Optional, Sequence, Union

import numpy as np
import pyexcel as pe


def get_logger(name: str, file: Optional[str] = None) -> logging.Logger:
    if file is None:
        file = os.environ.get("PLATESTRUCT_LOGFILE", "logfile.txt")

    logging.config.dictConfig(
        {
            "version": 1,
            "disable_existing_loggers": False,
            "formatters": {
                "verbose": {
                    "format": "%(levelname)s %(asctime)s %(funcName)s %(lineno)d "
                    "%(message)s",
                    "datefmt": "%d.%b.%Y %H:%M:%S",
                },
                "simple": {"format": "%(levelname)s %(message)s"},
            },
            "handlers": {
                "file": {
                    "level": "INFO",
                    "class": "logging.FileHandler",
                    "filename": file,
                    "formatter": "verbose",
                },
                "console": {
                    "level": "INFO",
                    "class": "logging.StreamHandler",
                    "formatter": "verbose",
                    "stream": "ext://sys.stdout",
                },
            },
            "loggers": {"": {"level": "INFO", "handlers": ["file", "console"]}},
        }
    )

    logging.captureWarnings(True)
    return logging.getLogger(name)


def save_rows(
    filename: Union[str, Path],
    header: Sequence[str],
    rows: Sequence[Sequence[Any]],
    comments: Optional[Sequence[str]] = None,
):
    """Write a table as CSV.

    Optional comment lines are written first as "# ..." rows so that run
    provenance travels with the data.

    """
    array: List[List[Any]] = list()
    if comments is not None:
        array.extend([[line] for line in comments])
    array.append(list(header))
    array.extend([[_plain(value) for value in row] for row in rows])

    Path(filename).parent.mkdir(parents=True, exist_ok=True)
    pe.save_as(array=array, dest_file_name=str(filename))


def _plain(value: Any) -> Any:
    if isinstance(value, (np.bool_, bool)):
        return str(bool(value))
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return repr(float(value))
    if isinstance(value, float):
        return repr(value)
    return value


def cutoff(t: np.ndarray) -> np.ndarray:
    """Smooth transition from 0 (t <= 1) to 1 (t >= 2).

    Quintic smoothstep, derivative bounded by 15/8.

    """
    s = np.clip(np.asarray(t, dtype=np.float64) - 1.0, 0.0, 1.0)
    return s ** 3 * (10.0 - 15.0 * s + 6.0 * s ** 2)


if __name__ == "__main__":
    logger = get_logger(__name__)
    logger.info("Helper functions.")
