"""
Utilitaires pour la validation des données
"""

from typing import List

import numpy as np


def is_strictly_increasing(values) -> bool:
    """
    Vérifie qu'un vecteur d'entiers est strictement croissant

    Args:
        values: Vecteur 1-D

    Returns:
        True si chaque élément est strictement supérieur au précédent
    """
    values = np.asarray(values)
    return values.ndim == 1 and bool(np.all(np.diff(values) > 0))


def is_binary(values) -> bool:
    """Vrai si toutes les valeurs sont 0 ou 1"""
    values = np.asarray(values)
    return bool(np.all((values == 0) | (values == 1)))


def in_unit_interval(values) -> bool:
    """Vrai si toutes les valeurs sont finies et dans [0, 1]"""
    values = np.asarray(values, dtype=np.float64)
    return bool(np.all(np.isfinite(values)) and np.all((values >= 0.0) & (values <= 1.0)))


def validate_ratio(ratio: float) -> bool:
    """
    Valide qu'un ratio (budget, sparsité) est dans ]0, 1]

    Args:
        ratio: Ratio à valider

    Returns:
        True si le ratio est valide, False sinon
    """
    return 0.0 < ratio <= 1.0


def interval_violations(intervals, n_frames: int) -> List[str]:
    """
    Liste les règles violées par une segmentation [S x 2] d'intervalles inclusifs

    Les intervalles doivent être triés, disjoints et couvrir [0, n_frames - 1].

    Args:
        intervals: Tableau [S x 2] (début, fin) inclusifs
        n_frames: Nombre de frames à couvrir

    Returns:
        Liste de règles violées (vide si la segmentation est valide)
    """
    intervals = np.asarray(intervals)
    if intervals.ndim != 2 or intervals.shape[1] != 2 or intervals.shape[0] == 0:
        return ["intervals must be a non-empty [S x 2] matrix"]

    problems = []
    starts, ends = intervals[:, 0], intervals[:, 1]
    if np.any(ends < starts):
        problems.append("interval end before start")
    if np.any(starts[1:] < starts[:-1]):
        problems.append("intervals not sorted")
    if np.any(starts[1:] <= ends[:-1]):
        problems.append("intervals overlap")
    if starts[0] != 0 or ends[-1] != n_frames - 1 or np.any(starts[1:] > ends[:-1] + 1):
        problems.append(f"intervals do not cover [0, {n_frames - 1}]")
    return problems


__all__ = [
    'is_strictly_increasing',
    'is_binary',
    'in_unit_interval',
    'validate_ratio',
    'interval_violations',
]
