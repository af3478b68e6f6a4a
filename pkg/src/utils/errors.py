"""
Exceptions de vidsum et codes de sortie associés

Codes de sortie de la CLI : 0 succès, 1 usage/configuration,
2 données (bundle, checkpoint), 3 échec numérique.
"""

from typing import Any, Dict, List, Optional


class VidSumError(Exception):
    """Erreur de base du pipeline"""
    exit_code = 1


class ConfigurationError(VidSumError, ValueError):
    """Configuration invalide (valeur, clé inconnue, combinaison interdite)"""
    exit_code = 1


class ShapeError(VidSumError, ValueError):
    """Dimensions de tenseurs incompatibles"""
    exit_code = 1


class DatasetFormatError(VidSumError):
    """Bundle illisible : manifest absent, en-tête .ten corrompu, ..."""
    exit_code = 2


class DatasetValidationError(VidSumError):
    """Invariants de dataset violés ; porte la liste des violations"""
    exit_code = 2

    def __init__(self, violations: List[Any]):
        self.violations = list(violations)
        lines = "\n".join(f"  - {v}" for v in self.violations)
        super().__init__(f"Dataset invalide ({len(self.violations)} violation(s)) :\n{lines}")


class CheckpointNotFoundError(VidSumError, FileNotFoundError):
    """Checkpoint absent ou incomplet"""
    exit_code = 2

    def __init__(self, path: Any):
        self.path = path
        super().__init__(f"checkpoint not found: {path}")


class NumericError(VidSumError, ArithmeticError):
    """Valeur non finie rencontrée ; `context` précise où (frame, epoch, vidéo)"""
    exit_code = 3

    def __init__(self, message: str, context: Optional[Dict[str, Any]] = None):
        self.context = dict(context or {})
        if self.context:
            details = ", ".join(f"{k}={v}" for k, v in self.context.items())
            message = f"{message} ({details})"
        super().__init__(message)


__all__ = [
    'VidSumError',
    'ConfigurationError',
    'ShapeError',
    'DatasetFormatError',
    'DatasetValidationError',
    'CheckpointNotFoundError',
    'NumericError',
]
