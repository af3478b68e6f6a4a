"""
Module de segmentation temporelle par noyau (KTS)
Découpe une séquence de features en plans (shots) par programmation dynamique
"""

import math
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from src.utils import setup_logger
from src.utils.errors import ConfigurationError, ShapeError
from src.utils.validators import interval_violations, is_strictly_increasing


logger = setup_logger(__name__)


@dataclass(eq=False)
class ShotSegmentation:
    """Intervalles [début, fin] inclusifs, triés, disjoints et contigus"""
    intervals: np.ndarray  # [S x 2]

    def __post_init__(self):
        self.intervals = np.asarray(self.intervals, dtype=np.int64).reshape(-1, 2)

    @property
    def n_shots(self) -> int:
        return int(self.intervals.shape[0])

    @property
    def n_frames(self) -> int:
        """Nombre de frames couvertes (fin du dernier intervalle + 1)"""
        return int(self.intervals[-1, 1]) + 1 if self.n_shots else 0

    @property
    def lengths(self) -> np.ndarray:
        return self.intervals[:, 1] - self.intervals[:, 0] + 1

    @property
    def change_points(self) -> np.ndarray:
        """Indices de début des plans 2..S (changements intérieurs)"""
        return self.intervals[1:, 0].copy()

    @classmethod
    def from_change_points(cls, change_points, n_frames: int) -> 'ShotSegmentation':
        """
        Construit une segmentation à partir des indices de début de plan

        Args:
            change_points: Débuts des plans 2..S, strictement croissants dans ]0, n_frames[
            n_frames: Longueur totale

        Returns:
            ShotSegmentation couvrant [0, n_frames - 1]
        """
        bounds = [0] + [int(c) for c in change_points] + [int(n_frames)]
        return cls(np.array([[bounds[i], bounds[i + 1] - 1] for i in range(len(bounds) - 1)]))

    def violations(self, n_frames: Optional[int] = None) -> List[str]:
        return interval_violations(self.intervals, self.n_frames if n_frames is None else n_frames)

    def __eq__(self, other) -> bool:
        if not isinstance(other, ShotSegmentation):
            return NotImplemented
        return np.array_equal(self.intervals, other.intervals)

    def __repr__(self) -> str:
        return f"ShotSegmentation({self.intervals.tolist()})"


@dataclass
class SegmentConfig:
    """Hyperparamètres KTS"""
    kernel: str = 'linear'           # linear | rbf
    gamma: Optional[float] = None    # rbf : exp(-gamma * ||xi - xj||^2), défaut 1/D
    max_segments: Optional[int] = None  # défaut ceil(T_s / 10)
    penalty_weight: float = 1.0

    def __post_init__(self):
        if self.kernel not in ('linear', 'rbf'):
            raise ConfigurationError(f"segment.kernel inconnu: {self.kernel}")
        if self.max_segments is not None and self.max_segments < 1:
            raise ConfigurationError("segment.max_segments doit être >= 1")
        if self.penalty_weight < 0:
            raise ConfigurationError("segment.penalty_weight doit être >= 0")


def kernel_matrix(x: np.ndarray, kind: str = 'linear', gamma: Optional[float] = None) -> np.ndarray:
    """
    Matrice de Gram des lignes de features

    Args:
        x: Features [T_s x D]
        kind: 'linear' (produit scalaire) ou 'rbf'
        gamma: Largeur du noyau rbf (défaut 1/D)

    Returns:
        Matrice symétrique [T_s x T_s] en float64
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 1:
        raise ShapeError(f"features [T_s x D] attendues, reçu {x.shape}")

    gram = x @ x.T
    if kind == 'linear':
        return 0.5 * (gram + gram.T)
    if kind == 'rbf':
        gamma = 1.0 / x.shape[1] if gamma is None else gamma
        sq = np.diag(gram)
        dist = np.maximum(sq[:, None] + sq[None, :] - 2.0 * gram, 0.0)
        kernel = np.exp(-gamma * dist)
        return 0.5 * (kernel + kernel.T)
    raise ConfigurationError(f"noyau inconnu: {kind}")


def within_segment_scatter(K: np.ndarray) -> np.ndarray:
    """
    Dispersion intra-segment J(a, b) pour tous les couples a <= b

    J(a, b) = sum_t K[t, t] - (1 / (b - a + 1)) * sum_{s, t} K[s, t] sur [a, b],
    calculée par sommes cumulées. Les cases a > b valent +inf.

    Args:
        K: Matrice noyau [T x T]

    Returns:
        Matrice [T x T]
    """
    n = K.shape[0]
    diag_cum = np.concatenate([[0.0], np.cumsum(np.diag(K))])
    block_cum = np.zeros((n + 1, n + 1))
    block_cum[1:, 1:] = np.cumsum(np.cumsum(K, axis=0), axis=1)

    a = np.arange(n)[:, None]
    b = np.arange(n)[None, :]
    with np.errstate(divide='ignore', invalid='ignore'):
        block = block_cum[b + 1, b + 1] + block_cum[a, a] - block_cum[b + 1, a] - block_cum[a, b + 1]
        scatter = diag_cum[b + 1] - diag_cum[a] - block / (b - a + 1)
    return np.where(b >= a, scatter, np.inf)


def segment_count_penalty(n_segments: int, length: int) -> float:
    """g(m) = m * (log(T / m) + 1)"""
    return n_segments * (math.log(length / n_segments) + 1.0)


def segmentation_cost(K: np.ndarray, seg: ShotSegmentation, penalty_weight: float = 1.0) -> float:
    """Objectif KTS d'une segmentation donnée : somme des J + penalty_weight * g(m)"""
    J = within_segment_scatter(K)
    scatter = sum(J[a, b] for a, b in seg.intervals)
    return float(scatter + penalty_weight * segment_count_penalty(seg.n_shots, K.shape[0]))


def _scatter_dynamic_program(J: np.ndarray, max_segments: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    costs[m, l] = coût minimal de découper les l premières frames en m segments

    Returns:
        (costs [M+1 x T+1], backpointers [M+1 x T+1])
    """
    n = J.shape[0]
    costs = np.full((max_segments + 1, n + 1), np.inf)
    back = np.zeros((max_segments + 1, n + 1), dtype=np.int64)
    costs[1, 1:] = J[0, :]

    for m in range(2, max_segments + 1):
        for end in range(m, n + 1):
            # dernier segment = [t, end - 1]
            candidates = costs[m - 1, m - 1:end] + J[m - 1:end, end - 1]
            best = int(np.argmin(candidates))
            costs[m, end] = candidates[best]
            back[m, end] = best + m - 1
    return costs, back


def kts_changepoints(K: np.ndarray,
                     max_segments: int,
                     penalty_weight: float = 1.0) -> ShotSegmentation:
    """
    Segmentation optimale au sens de la dispersion intra-segment pénalisée

    Minimise sum J(segment) + penalty_weight * g(m) sur toutes les segmentations
    d'au plus max_segments segments. Programme dynamique exact en O(T^2 * M).

    Args:
        K: Matrice noyau [T_s x T_s]
        max_segments: Nombre maximal de segments (>= 1)
        penalty_weight: Poids de la pénalité de sélection de modèle

    Returns:
        ShotSegmentation en indices de frames échantillonnées

    Raises:
        ConfigurationError: Si max_segments < 1 ou > T_s
    """
    K = np.asarray(K, dtype=np.float64)
    n = K.shape[0]
    if K.ndim != 2 or K.shape[1] != n:
        raise ShapeError(f"matrice noyau carrée attendue, reçu {K.shape}")
    if max_segments < 1:
        raise ConfigurationError("max_segments doit être >= 1")
    if max_segments > n:
        raise ConfigurationError(f"max_segments={max_segments} > T_s={n}")

    J = within_segment_scatter(K)
    costs, back = _scatter_dynamic_program(J, max_segments)

    objectives = [costs[m, n] + penalty_weight * segment_count_penalty(m, n)
                  for m in range(1, max_segments + 1)]
    n_segments = int(np.argmin(objectives)) + 1

    # Backtracking
    change_points = []
    end = n
    for m in range(n_segments, 1, -1):
        end = int(back[m, end])
        change_points.append(end)
    change_points.reverse()

    logger.debug(f"KTS: {n_segments} segment(s) sur {n} frames (objectif {objectives[n_segments - 1]:.4f})")
    return ShotSegmentation.from_change_points(change_points, n)


def to_original_frames(seg: ShotSegmentation, picks, n_frames: int) -> ShotSegmentation:
    """
    Convertit une segmentation en frames échantillonnées vers les frames originales

    Un changement après l'indice échantillonné i devient une frontière à
    floor((picks[i] + picks[i + 1]) / 2) ; le premier plan commence en 0
    et le dernier est étendu jusqu'à n_frames - 1.

    Args:
        seg: Segmentation sur [0, T_s - 1]
        picks: Indice original de chaque frame échantillonnée
        n_frames: Nombre de frames originales

    Returns:
        ShotSegmentation couvrant [0, n_frames - 1]

    Raises:
        ShapeError: Si picks est incohérent avec la segmentation
    """
    picks = np.asarray(picks, dtype=np.int64)
    if seg.n_frames != len(picks):
        raise ShapeError(f"segmentation sur {seg.n_frames} frames, {len(picks)} picks")
    if not is_strictly_increasing(picks) or picks[0] < 0 or picks[-1] >= n_frames:
        raise ShapeError("picks doit être strictement croissant dans [0, n_frames - 1]")

    ends = [(int(picks[e]) + int(picks[e + 1])) // 2 for e in seg.intervals[:-1, 1]]
    return ShotSegmentation.from_change_points([e + 1 for e in ends], n_frames)


def segment_features(features: np.ndarray,
                     picks,
                     n_frames: int,
                     config: Optional[SegmentConfig] = None) -> ShotSegmentation:
    """
    Pipeline complet : noyau -> KTS -> frames originales

    Args:
        features: Features échantillonnées [T_s x D]
        picks: Indices originaux des frames échantillonnées
        n_frames: Nombre de frames originales
        config: Hyperparamètres KTS

    Returns:
        ShotSegmentation en frames originales
    """
    config = config or SegmentConfig()
    K = kernel_matrix(features, config.kernel, config.gamma)
    n = K.shape[0]
    max_segments = config.max_segments or math.ceil(n / 10)
    seg = kts_changepoints(K, min(max_segments, n), config.penalty_weight)
    return to_original_frames(seg, picks, n_frames)


__all__ = [
    'ShotSegmentation',
    'SegmentConfig',
    'kernel_matrix',
    'within_segment_scatter',
    'segment_count_penalty',
    'segmentation_cost',
    'kts_changepoints',
    'to_original_frames',
    'segment_features',
]
