"""
Module de sélection des key-shots
Convertit des scores de frames + une segmentation en résumé binaire sous budget
"""

import math
from dataclasses import dataclass, field
from typing import List, Sequence

import numpy as np

from src.modules.segment import ShotSegmentation
from src.utils import setup_logger
from src.utils.errors import ConfigurationError, ShapeError
from src.utils.validators import validate_ratio


logger = setup_logger(__name__)

POOLING_MODES = ('mean', 'max', 'sum')

# tolérance de comparaison des valeurs de knapsack
_VALUE_TOL = 1e-12


@dataclass
class SummaryConfig:
    """Paramètres de génération du résumé"""
    budget_ratio: float = 0.15
    pooling: str = 'mean'

    def __post_init__(self):
        if not validate_ratio(self.budget_ratio):
            raise ConfigurationError(f"summary.budget_ratio hors de ]0, 1]: {self.budget_ratio}")
        if self.pooling not in POOLING_MODES:
            raise ConfigurationError(f"summary.pooling inconnu: {self.pooling}")

    def budget(self, n_frames: int) -> int:
        return int(math.floor(self.budget_ratio * n_frames))


@dataclass
class SummarySelection:
    """Résumé key-shot d'une vidéo"""
    chosen_shots: List[int]
    frame_mask: np.ndarray  # [N_f] uint8
    budget_frames: int
    shot_values: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @property
    def selected_frames(self) -> int:
        return int(self.frame_mask.sum())


def shot_scores(p, picks, seg: ShotSegmentation, pooling: str = 'mean') -> np.ndarray:
    """
    Agrège les scores de frames échantillonnées par plan

    Args:
        p: Scores [T_s]
        picks: Indice original de chaque frame échantillonnée
        seg: Segmentation en frames originales
        pooling: 'mean' (défaut), 'max' ou 'sum'

    Returns:
        Valeur de chaque plan [S] ; 0 pour un plan sans frame échantillonnée
    """
    p = np.asarray(p, dtype=np.float64)
    picks = np.asarray(picks, dtype=np.int64)
    if p.shape != picks.shape:
        raise ShapeError(f"{p.shape[0]} scores pour {picks.shape[0]} picks")
    if pooling not in POOLING_MODES:
        raise ConfigurationError(f"pooling inconnu: {pooling}")

    # plan contenant chaque frame échantillonnée
    owner = np.searchsorted(seg.intervals[:, 1], picks, side='left')
    values = np.zeros(seg.n_shots)
    for shot in range(seg.n_shots):
        members = p[owner == shot]
        if members.size == 0:
            continue
        if pooling == 'mean':
            values[shot] = members.mean()
        elif pooling == 'max':
            values[shot] = members.max()
        else:
            values[shot] = members.sum()
    return values


def knapsack_select(values: Sequence[float], lengths: Sequence[int], budget: int) -> List[int]:
    """
    Knapsack 0/1 exact par programmation dynamique sur le budget

    Maximise sum(values) sous sum(lengths) <= budget. À valeur optimale égale,
    le plus petit ensemble d'indices dans l'ordre lexicographique gagne : on
    décide les indices dans l'ordre croissant, on prend un plan dès qu'un
    optimum le contient, et un plan de valeur nulle n'est jamais pris.

    Args:
        values: Valeur de chaque plan
        lengths: Longueur (entière > 0) de chaque plan
        budget: Capacité (>= 0)

    Returns:
        Indices choisis, triés
    """
    values = np.asarray(values, dtype=np.float64)
    lengths = np.asarray(lengths, dtype=np.int64)
    if values.shape != lengths.shape:
        raise ShapeError(f"{values.shape[0]} valeurs pour {lengths.shape[0]} longueurs")
    if np.any(lengths <= 0):
        raise ConfigurationError("les longueurs de plans doivent être > 0")
    budget = int(budget)
    if budget <= 0 or values.size == 0:
        return []

    n = values.size
    # best[i, c] = meilleure valeur avec les plans i..n-1 et la capacité c
    best = np.zeros((n + 1, budget + 1))
    for i in range(n - 1, -1, -1):
        best[i] = best[i + 1]
        w = lengths[i]
        if w <= budget:
            take = values[i] + best[i + 1, :budget + 1 - w]
            best[i, w:] = np.maximum(best[i + 1, w:], take)

    chosen = []
    capacity = budget
    for i in range(n):
        w = lengths[i]
        if values[i] <= _VALUE_TOL:
            continue
        if w <= capacity and values[i] + best[i + 1, capacity - w] >= best[i, capacity] - _VALUE_TOL:
            chosen.append(i)
            capacity -= w
    return chosen


def to_frame_summary(chosen: Sequence[int], seg: ShotSegmentation, n_frames: int) -> np.ndarray:
    """
    Masque binaire des frames appartenant aux plans choisis

    Args:
        chosen: Indices de plans
        seg: Segmentation en frames originales
        n_frames: Longueur du masque

    Returns:
        Vecteur uint8 [n_frames]
    """
    mask = np.zeros(n_frames, dtype=np.uint8)
    for shot in chosen:
        if not 0 <= shot < seg.n_shots:
            raise ShapeError(f"plan {shot} hors de la segmentation ({seg.n_shots} plans)")
        start, end = seg.intervals[shot]
        mask[start:end + 1] = 1
    return mask


def generate_summary(p,
                     picks,
                     seg: ShotSegmentation,
                     n_frames: int,
                     config: SummaryConfig = None) -> SummarySelection:
    """
    Scores -> valeurs de plans -> knapsack -> masque de frames

    Args:
        p: Scores [T_s]
        picks: Indices originaux des frames échantillonnées
        seg: Segmentation en frames originales
        n_frames: Nombre de frames originales
        config: Budget et pooling

    Returns:
        SummarySelection
    """
    config = config or SummaryConfig()
    values = shot_scores(p, picks, seg, config.pooling)
    budget = config.budget(n_frames)
    chosen = knapsack_select(values, seg.lengths, budget)
    mask = to_frame_summary(chosen, seg, n_frames)
    logger.debug(f"Résumé: {len(chosen)}/{seg.n_shots} plans, {int(mask.sum())}/{budget} frames")
    return SummarySelection(chosen_shots=chosen, frame_mask=mask,
                            budget_frames=budget, shot_values=values)


__all__ = [
    'POOLING_MODES',
    'SummaryConfig',
    'SummarySelection',
    'shot_scores',
    'knapsack_select',
    'to_frame_summary',
    'generate_summary',
]
