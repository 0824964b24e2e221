"""
JSON documents for models, targets, configs and parameters.

Arrays travel as nested JSON lists. Floats are written in their shortest round-trip
representation, so a dump followed by a load reproduces every value bit for bit.
"""

import json
import logging
from pathlib import Path
from typing import Annotated, TypeVar

import numpy as np
from pydantic import BaseModel, BeforeValidator, PlainSerializer, ValidationError

from phfit.common.exceptions import DocumentError

logger = logging.getLogger(__name__)

ModelT = TypeVar("ModelT", bound=BaseModel)


def _frozen_array(ndim: int):
    def convert(value):
        array = np.array(value, dtype=float)
        if array.ndim == 0 and ndim == 1:
            array = array.reshape(1)
        if array.ndim != ndim:
            raise ValueError(f"expected a {ndim}-dimensional array, got shape {array.shape}")
        if not np.all(np.isfinite(array)):
            raise ValueError("array contains non-finite values")
        array.setflags(write=False)
        return array

    return convert


def _to_list(array: np.ndarray) -> list:
    return array.tolist()


Vector = Annotated[
    np.ndarray,
    BeforeValidator(_frozen_array(1)),
    PlainSerializer(_to_list, return_type=list),
]
Matrix = Annotated[
    np.ndarray,
    BeforeValidator(_frozen_array(2)),
    PlainSerializer(_to_list, return_type=list),
]


def format_validation_error(error: ValidationError) -> list[str]:
    diagnostics = []
    for item in error.errors():
        location = ".".join(str(part) for part in item["loc"]) or "<document>"
        diagnostics.append(f"field '{location}': {item['msg']}")
    return diagnostics


def load_data(path: str | Path):
    """Parsed JSON content of path, before any model validation."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as e:
        raise DocumentError(str(path), [f"cannot read file: {e.strerror}"])

    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise DocumentError(str(path), [f"line {e.lineno} column {e.colno}: {e.msg}"])


def validate_document(data, model: type[ModelT], source: str = "<arguments>") -> ModelT:
    try:
        return model.model_validate(data)
    except ValidationError as e:
        raise DocumentError(source, format_validation_error(e))


def load_document(path: str | Path, model: type[ModelT]) -> ModelT:
    """Read and validate a JSON document, raising DocumentError with diagnostics."""
    return validate_document(load_data(path), model, str(path))


def dump_document(document: BaseModel, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(document.model_dump_json(indent=2) + "\n")
    logger.debug(f"Wrote {type(document).__name__} document to {path}")
    return path
