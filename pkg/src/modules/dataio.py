"""
Module d'entrée/sortie des datasets
Format bundle sur disque, chargement/validation et génération de données synthétiques
"""

import json
from dataclasses import asdict, dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np

from src.modules.segment import ShotSegmentation, to_original_frames
from src.modules.summarize import knapsack_select, to_frame_summary
from src.utils import setup_logger
from src.utils.errors import ConfigurationError, DatasetFormatError, DatasetValidationError
from src.utils.tensor_file import read_tensor, write_tensor
from src.utils.validators import in_unit_interval, interval_violations, is_binary, is_strictly_increasing


logger = setup_logger(__name__)

MANIFEST_NAME = 'manifest.json'
TENSOR_FIELDS = ('features', 'picks', 'gtscore', 'user_summaries', 'change_points')

# dtype de stockage de chaque champ
_FIELD_DTYPES = {
    'features': np.float32,
    'picks': np.int32,
    'gtscore': np.float32,
    'user_summaries': np.uint8,
    'change_points': np.int32,
}


class DatasetKind(str, Enum):
    """Règle d'agrégation des résumés utilisateurs en évaluation"""
    SUMME = 'summe'
    TVSUM = 'tvsum'
    SYNTHETIC = 'synthetic'


@dataclass(eq=False)
class VideoRecord:
    """Une vidéo : features échantillonnées, annotations et indices de frames"""
    id: str
    features: np.ndarray                          # [T_s x D] float32
    n_frames: int                                 # N_f
    picks: np.ndarray                             # [T_s] int32
    gtscore: Optional[np.ndarray] = None          # [T_s] float32
    user_summaries: Optional[np.ndarray] = None   # [U x N_f] uint8
    change_points: Optional[np.ndarray] = None    # [S x 2] int32

    @property
    def n_steps(self) -> int:
        return int(self.features.shape[0])

    @property
    def feature_dim(self) -> int:
        return int(self.features.shape[1])

    @property
    def present_fields(self) -> List[str]:
        return [name for name in TENSOR_FIELDS if getattr(self, name) is not None]

    @property
    def segmentation(self) -> Optional[ShotSegmentation]:
        if self.change_points is None:
            return None
        return ShotSegmentation(self.change_points)

    def __eq__(self, other) -> bool:
        if not isinstance(other, VideoRecord):
            return NotImplemented
        if self.id != other.id or self.n_frames != other.n_frames:
            return False
        for name in TENSOR_FIELDS:
            mine, theirs = getattr(self, name), getattr(other, name)
            if (mine is None) != (theirs is None):
                return False
            if mine is not None and (mine.dtype != theirs.dtype or not np.array_equal(mine, theirs)):
                return False
        return True


@dataclass
class Dataset:
    """Collection ordonnée de vidéos"""
    name: str
    kind: DatasetKind
    videos: List[VideoRecord]
    metadata: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        self.kind = DatasetKind(self.kind)

    @property
    def ids(self) -> List[str]:
        return [v.id for v in self.videos]

    def get(self, video_id: str) -> VideoRecord:
        for video in self.videos:
            if video.id == video_id:
                return video
        raise KeyError(video_id)

    def subset(self, ids) -> List[VideoRecord]:
        wanted = set(ids)
        return [v for v in self.videos if v.id in wanted]

    def __len__(self) -> int:
        return len(self.videos)


@dataclass(frozen=True)
class Violation:
    """Invariant violé : vidéo, champ, règle"""
    video_id: str
    field: str
    rule: str

    def __str__(self) -> str:
        return f"{self.video_id}.{self.field}: {self.rule}"


@dataclass
class SyntheticSpec:
    """Paramètres du générateur synthétique"""
    n_videos: int = 8
    min_steps: int = 60
    max_steps: int = 120
    feature_dim: int = 32
    n_users: int = 3
    min_segments: int = 6
    max_segments: int = 12
    seed: int = 0
    noise: float = 0.1            # 0 = mode sans bruit
    label_noise: float = 0.05
    user_noise: float = 0.1
    frame_step: int = 2           # frames originales par frame échantillonnée
    min_segment_steps: int = 4
    important_fraction: float = 0.3
    user_budget_ratio: float = 0.15

    def __post_init__(self):
        errors = []
        for name in ('n_videos', 'min_steps', 'max_steps', 'feature_dim', 'n_users',
                     'min_segments', 'max_segments', 'frame_step', 'min_segment_steps'):
            if getattr(self, name) < 1:
                errors.append(f"{name} doit être >= 1")
        if self.min_steps > self.max_steps:
            errors.append("min_steps > max_steps")
        if self.min_segments > self.max_segments:
            errors.append("min_segments > max_segments")
        if self.max_segments * self.min_segment_steps > self.min_steps:
            errors.append("max_segments * min_segment_steps dépasse min_steps")
        for name in ('noise', 'label_noise', 'user_noise'):
            if getattr(self, name) < 0:
                errors.append(f"{name} doit être >= 0")
        if not 0.0 <= self.important_fraction <= 1.0:
            errors.append("important_fraction hors de [0, 1]")
        if errors:
            raise ConfigurationError("SyntheticSpec invalide :\n" + "\n".join(f"  - {e}" for e in errors))


# ========================================
# VALIDATION
# ========================================
def _video_violations(video: VideoRecord) -> List[Violation]:
    found = []

    def add(field_name: str, rule: str):
        found.append(Violation(video.id, field_name, rule))

    features = video.features
    if features.ndim != 2 or features.shape[0] < 1 or features.shape[1] < 1:
        add('features', f"expected [T_s x D] with T_s, D >= 1, got shape {features.shape}")
        return found
    if not np.all(np.isfinite(features)):
        add('features', "non-finite values")
    n_steps = features.shape[0]

    if video.n_frames < 1:
        add('n_frames', "must be positive")

    picks = video.picks
    if picks.ndim != 1 or picks.shape[0] != n_steps:
        add('picks', f"length {picks.shape} differs from T_s={n_steps}")
    elif not is_strictly_increasing(picks):
        add('picks', "not strictly increasing")
    elif picks[0] < 0 or picks[-1] >= video.n_frames:
        add('picks', "index outside [0, n_frames - 1]")

    if video.gtscore is not None:
        if video.gtscore.shape != (n_steps,):
            add('gtscore', f"length {video.gtscore.shape} differs from T_s={n_steps}")
        elif not in_unit_interval(video.gtscore):
            add('gtscore', "score out of [0,1]")

    if video.user_summaries is not None:
        users = video.user_summaries
        if users.ndim != 2 or users.shape[1] != video.n_frames:
            add('user_summaries', f"expected [U x {video.n_frames}], got {users.shape}")
        elif not is_binary(users):
            add('user_summaries', "values not in {0,1}")

    if video.change_points is not None:
        for rule in interval_violations(video.change_points, video.n_frames):
            add('change_points', rule)
    return found


def validate(d: Dataset) -> List[Violation]:
    """
    Vérifie tous les invariants d'un dataset

    Args:
        d: Dataset à valider

    Returns:
        Liste des violations (vide si le dataset est valide)
    """
    violations = []
    seen = set()
    for video in d.videos:
        if video.id in seen:
            violations.append(Violation(video.id, 'id', "duplicate video id"))
        seen.add(video.id)
        violations.extend(_video_violations(video))

    dims = {v.features.shape[1] for v in d.videos if v.features.ndim == 2}
    if len(dims) > 1:
        violations.append(Violation(d.name, 'features', f"feature dimension differs across videos: {sorted(dims)}"))
    return violations


# ========================================
# BUNDLE I/O
# ========================================
def write_dataset(d: Dataset, path: Union[str, Path]) -> Path:
    """
    Écrit un dataset au format bundle (manifest.json + un fichier .ten par champ)

    Args:
        d: Dataset valide
        path: Répertoire de destination (créé si besoin)

    Returns:
        Chemin du bundle

    Raises:
        DatasetValidationError: Si le dataset est vide ou invalide
        OSError: Si le répertoire n'est pas inscriptible
    """
    if not d.videos:
        raise DatasetValidationError([Violation(d.name, 'videos', "empty dataset")])
    violations = validate(d)
    if violations:
        raise DatasetValidationError(violations)

    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)

    entries = []
    for video in d.videos:
        for name in video.present_fields:
            array = np.asarray(getattr(video, name), dtype=_FIELD_DTYPES[name])
            write_tensor(path / f"{video.id}.{name}.ten", array)
        entries.append({'id': video.id, 'n_frames': int(video.n_frames), 'fields': video.present_fields})

    manifest = {
        'name': d.name,
        'kind': d.kind.value,
        'videos': entries,
        'metadata': d.metadata,
    }
    (path / MANIFEST_NAME).write_text(json.dumps(manifest, indent=2, sort_keys=True), encoding='utf-8')
    logger.info(f"💾 Dataset '{d.name}' écrit: {len(d.videos)} vidéos -> {path}")
    return path


def load_dataset(path: Union[str, Path]) -> Dataset:
    """
    Charge et valide un bundle

    Args:
        path: Répertoire du bundle

    Returns:
        Dataset dont tous les invariants sont vérifiés

    Raises:
        DatasetFormatError: Si le manifest ou un fichier tenseur est absent ou illisible
        DatasetValidationError: Si un invariant est violé (vidéo et champ nommés)
    """
    path = Path(path)
    manifest_path = path / MANIFEST_NAME
    if not manifest_path.exists():
        raise DatasetFormatError(f"manifest absent: {manifest_path}")
    try:
        manifest = json.loads(manifest_path.read_text(encoding='utf-8'))
        kind = DatasetKind(manifest['kind'])
        entries = manifest['videos']
    except (ValueError, KeyError) as e:
        raise DatasetFormatError(f"manifest invalide ({manifest_path}): {e}") from e

    videos = []
    for position, entry in enumerate(entries):
        try:
            video_id = str(entry['id'])
            n_frames = int(entry['n_frames'])
            fields = set(entry.get('fields', []))
        except (KeyError, TypeError, ValueError, AttributeError) as e:
            raise DatasetFormatError(f"manifest invalide ({manifest_path}), vidéo n°{position}: {e!r}") from e
        unknown = fields - set(TENSOR_FIELDS)
        if unknown or not {'features', 'picks'} <= fields:
            raise DatasetFormatError(f"{video_id}: champs invalides {sorted(fields)}")
        tensors = {name: read_tensor(path / f"{video_id}.{name}.ten") for name in fields}
        videos.append(VideoRecord(id=video_id, n_frames=n_frames, **tensors))

    dataset = Dataset(name=manifest.get('name', path.name), kind=kind, videos=videos,
                      metadata=manifest.get('metadata', {}))
    violations = validate(dataset)
    if violations:
        raise DatasetValidationError(violations)
    logger.info(f"📂 Dataset '{dataset.name}' chargé: {len(videos)} vidéos ({kind.value})")
    return dataset


# ========================================
# GÉNÉRATION SYNTHÉTIQUE
# ========================================
def _segment_lengths(rng: np.random.Generator, n_steps: int, n_segments: int, minimum: int) -> np.ndarray:
    """Longueurs de segments >= minimum dont la somme vaut n_steps"""
    extra = rng.multinomial(n_steps - n_segments * minimum, np.full(n_segments, 1.0 / n_segments))
    return extra + minimum


def _synthetic_video(rng: np.random.Generator, spec: SyntheticSpec, index: int,
                     importance_axis: np.ndarray) -> Tuple[VideoRecord, Dict[str, Any]]:
    n_steps = int(rng.integers(spec.min_steps, spec.max_steps + 1))
    n_segments = int(rng.integers(spec.min_segments, spec.max_segments + 1))
    lengths = _segment_lengths(rng, n_steps, n_segments, spec.min_segment_steps)
    starts = np.concatenate([[0], np.cumsum(lengths)[:-1]])
    sampled_seg = ShotSegmentation(np.stack([starts, starts + lengths - 1], axis=1))

    n_important = int(round(spec.important_fraction * n_segments)) if n_segments > 1 else 0
    important = np.zeros(n_segments, dtype=bool)
    important[rng.choice(n_segments, size=n_important, replace=False)] = True

    # features autour d'un centroïde par segment ; les segments importants sont décalés
    # le long d'un axe commun et plus dynamiques
    centroids = rng.normal(0.0, 1.0, size=(n_segments, spec.feature_dim))
    centroids[important] += importance_axis
    segment_of = np.repeat(np.arange(n_segments), lengths)
    motion = np.where(important[segment_of], 2.0, 1.0)[:, None]
    features = centroids[segment_of] + spec.noise * motion * rng.normal(size=(n_steps, spec.feature_dim))

    levels = np.where(important, 0.8, 0.2)
    gtscore = np.clip(levels[segment_of] + spec.label_noise * rng.normal(size=n_steps), 0.0, 1.0)

    n_frames = n_steps * spec.frame_step + int(rng.integers(0, spec.frame_step))
    picks = np.arange(n_steps) * spec.frame_step
    shots = to_original_frames(sampled_seg, picks, n_frames)

    # chaque utilisateur choisit des plans par knapsack sur des valeurs bruitées
    budget = int(np.floor(spec.user_budget_ratio * n_frames))
    user_summaries = np.zeros((spec.n_users, n_frames), dtype=np.uint8)
    for user in range(spec.n_users):
        values = np.clip(levels + spec.user_noise * rng.normal(size=n_segments), 0.0, None)
        chosen = knapsack_select(values, shots.lengths, budget)
        user_summaries[user] = to_frame_summary(chosen, shots, n_frames)

    video = VideoRecord(
        id=f"video_{index:03d}",
        features=features.astype(np.float32),
        n_frames=n_frames,
        picks=picks.astype(np.int32),
        gtscore=gtscore.astype(np.float32),
        user_summaries=user_summaries,
        change_points=shots.intervals.astype(np.int32),
    )
    meta = {
        'segments': sampled_seg.intervals.tolist(),
        'important': important.astype(int).tolist(),
    }
    return video, meta


def generate_synthetic(spec: SyntheticSpec, name: str = 'synthetic') -> Dataset:
    """
    Génère un dataset synthétique déterministe (fonction pure de spec, seed inclus)

    Chaque vidéo est faite de segments stationnaires (features tirées autour d'un
    centroïde par segment) ; les frontières plantées et les segments importants
    sont enregistrés dans metadata['ground_truth'].

    Args:
        spec: Paramètres du générateur
        name: Nom du dataset

    Returns:
        Dataset synthétique
    """
    rng = np.random.default_rng(spec.seed)
    importance_axis = rng.normal(0.0, 1.0, size=spec.feature_dim)

    videos = []
    ground_truth = {}
    for index in range(spec.n_videos):
        video, meta = _synthetic_video(rng, spec, index, importance_axis)
        videos.append(video)
        ground_truth[video.id] = meta

    logger.info(f"🧪 Dataset synthétique généré: {spec.n_videos} vidéos (seed={spec.seed})")
    return Dataset(
        name=name,
        kind=DatasetKind.SYNTHETIC,
        videos=videos,
        metadata={'synthetic_spec': asdict(spec), 'ground_truth': ground_truth},
    )


__all__ = [
    'MANIFEST_NAME',
    'TENSOR_FIELDS',
    'DatasetKind',
    'VideoRecord',
    'Dataset',
    'Violation',
    'SyntheticSpec',
    'validate',
    'write_dataset',
    'load_dataset',
    'generate_synthetic',
]
