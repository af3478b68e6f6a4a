"""Utilitaires pour vidsum"""

from .logger import (
    setup_logger,
    log_section,
    format_metrics,
    JsonlLog,
    write_jsonl,
    read_jsonl,
)
from .errors import (
    VidSumError,
    ConfigurationError,
    ShapeError,
    DatasetFormatError,
    DatasetValidationError,
    CheckpointNotFoundError,
    NumericError,
)
from .validators import (
    is_strictly_increasing,
    is_binary,
    in_unit_interval,
    validate_ratio,
    interval_violations,
)
from .tensor_file import read_tensor, write_tensor, encode_tensor, decode_tensor

__all__ = [
    'setup_logger',
    'log_section',
    'format_metrics',
    'JsonlLog',
    'write_jsonl',
    'read_jsonl',
    'VidSumError',
    'ConfigurationError',
    'ShapeError',
    'DatasetFormatError',
    'DatasetValidationError',
    'CheckpointNotFoundError',
    'NumericError',
    'is_strictly_increasing',
    'is_binary',
    'in_unit_interval',
    'validate_ratio',
    'interval_violations',
    'read_tensor',
    'write_tensor',
    'encode_tensor',
    'decode_tensor',
]
