"""
Module d'évaluation
F-score des résumés contre les résumés utilisateurs, protocole de splits
(canonical / augmented / transfer), rapports et tableau d'ablation
"""

import json
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from src.modules.csnet import CSNet, score_video
from src.modules.dataio import Dataset, DatasetKind, VideoRecord
from src.modules.segment import SegmentConfig, segment_features
from src.modules.summarize import SummaryConfig, SummarySelection, generate_summary
from src.modules.trainer import Checkpoint, TrainConfig, TrainHistory, ablation_matrix, train
from src.utils import log_section, setup_logger, write_jsonl
from src.utils.errors import ConfigurationError, DatasetValidationError, ShapeError


logger = setup_logger(__name__)

SETTINGS = ('canonical', 'augmented', 'transfer')
AGGREGATIONS = ('max', 'mean')

RESULTS_FILE = 'results.jsonl'
SUMMARY_FILE = 'summary.txt'
REPORT_FILE = 'report.json'
ABLATION_RESULTS_FILE = 'ablation.jsonl'
ABLATION_TABLE_FILE = 'ablation.txt'


@dataclass
class EvalConfig:
    """Protocole d'évaluation"""
    setting: str = 'canonical'
    n_repeats: int = 5
    seed: int = 0
    synthetic_aggregation: str = 'mean'
    checkpoint: Optional[str] = None        # None = réentraîner sur chaque split
    auxiliary: List[str] = field(default_factory=list)   # bundles auxiliaires (augmented/transfer)

    def __post_init__(self):
        if self.setting not in SETTINGS:
            raise ConfigurationError(f"eval.setting inconnu: {self.setting} (attendu: {', '.join(SETTINGS)})")
        if self.n_repeats < 2:
            raise ConfigurationError("eval.n_repeats doit être >= 2")
        if self.synthetic_aggregation not in AGGREGATIONS:
            raise ConfigurationError(f"eval.synthetic_aggregation inconnu: {self.synthetic_aggregation}")


@dataclass(frozen=True)
class VideoScore:
    precision: float
    recall: float
    fscore: float


@dataclass
class Split:
    """Un découpage train/test"""
    index: int
    train_ids: List[str]
    test_ids: List[str]


@dataclass
class VideoResult:
    """Score d'une vidéo de test dans un split"""
    split: int
    video_id: str
    precision: float
    recall: float
    fscore: float
    selected_frames: int
    budget_frames: int

    def to_record(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass
class EvalReport:
    """Résultats agrégés : moyenne par split puis moyenne des splits"""
    setting: str
    results: List[VideoResult]
    split_fscores: List[float]
    final_fscore: float
    provenance: Dict[str, Any] = field(default_factory=dict)

    @property
    def n_splits(self) -> int:
        return len(self.split_fscores)


# ========================================
# MÉTRIQUES
# ========================================
def fscore(pred, user) -> Tuple[float, float, float]:
    """
    Précision, rappel et F-score (en %) du recouvrement de deux masques binaires

    Conventions : |pred| = 0 -> P = 0 ; |user| = 0 -> R = 0 ; P + R = 0 -> F = 0.

    Args:
        pred: Masque prédit [N_f]
        user: Masque utilisateur [N_f]

    Returns:
        (P, R, F)
    """
    pred = np.asarray(pred).astype(bool)
    user = np.asarray(user).astype(bool)
    if pred.shape != user.shape:
        raise ShapeError(f"masques de longueurs différentes: {pred.shape} vs {user.shape}")

    overlap = float(np.logical_and(pred, user).sum())
    n_pred, n_user = float(pred.sum()), float(user.sum())
    precision = overlap / n_pred if n_pred > 0 else 0.0
    recall = overlap / n_user if n_user > 0 else 0.0
    if precision + recall == 0:
        return precision, recall, 0.0
    return precision, recall, 2 * precision * recall / (precision + recall) * 100


def aggregation_rule(kind: Union[DatasetKind, str], synthetic_aggregation: str = 'mean') -> str:
    """Règle d'agrégation des utilisateurs : max pour summe, moyenne pour tvsum"""
    kind = DatasetKind(kind)
    if kind is DatasetKind.SUMME:
        return 'max'
    if kind is DatasetKind.TVSUM:
        return 'mean'
    return synthetic_aggregation


def score_against_users(pred, user_summaries, kind, synthetic_aggregation: str = 'mean') -> VideoScore:
    """
    Compare un résumé à tous les utilisateurs

    En mode max, P et R sont ceux de l'utilisateur le mieux apparié ;
    en mode mean, P, R et F sont moyennés séparément.
    """
    users = np.atleast_2d(np.asarray(user_summaries))
    if users.size == 0 or users.shape[0] == 0:
        raise DatasetValidationError(["aucun résumé utilisateur pour l'évaluation"])

    scores = np.array([fscore(pred, row) for row in users])
    if aggregation_rule(kind, synthetic_aggregation) == 'max':
        best = int(np.argmax(scores[:, 2]))
        return VideoScore(*(float(v) for v in scores[best]))
    return VideoScore(*(float(v) for v in scores.mean(axis=0)))


def evaluate_video(pred, user_summaries, kind, synthetic_aggregation: str = 'mean') -> float:
    """
    F-score (%) d'un résumé contre U résumés utilisateurs

    Args:
        pred: Masque prédit [N_f]
        user_summaries: Matrice [U x N_f]
        kind: Type de dataset (règle d'agrégation)
        synthetic_aggregation: Règle pour les datasets synthétiques

    Returns:
        F-score agrégé
    """
    return score_against_users(pred, user_summaries, kind, synthetic_aggregation).fscore


# ========================================
# SPLITS
# ========================================
def _check_disjoint_ids(target: Dataset, auxiliary: Sequence[Dataset]) -> List[str]:
    aux_ids = [vid for d in auxiliary for vid in d.ids]
    clashes = sorted(set(aux_ids) & set(target.ids)) + sorted({i for i in aux_ids if aux_ids.count(i) > 1})
    if clashes:
        raise ConfigurationError(f"ids vidéo en double entre datasets: {clashes}")
    return aux_ids


def make_splits(dataset: Dataset,
                setting: str = 'canonical',
                n_repeats: int = 5,
                seed: int = 0,
                auxiliary: Sequence[Dataset] = ()) -> List[Split]:
    """
    Découpages train/test

    canonical : partition seedée en n_repeats folds disjoints couvrant chaque vidéo
    une fois (test = un fold, train = le reste) ;
    augmented : chaque train canonical + toutes les vidéos auxiliaires ;
    transfer : un seul split, train = auxiliaires, test = tout le dataset cible.

    Args:
        dataset: Dataset cible
        setting: 'canonical', 'augmented' ou 'transfer'
        n_repeats: Nombre de folds
        seed: Graine de l'assignation aux folds
        auxiliary: Datasets auxiliaires

    Returns:
        Liste de Split
    """
    if setting not in SETTINGS:
        raise ConfigurationError(f"setting inconnu: {setting}")
    aux_ids = _check_disjoint_ids(dataset, auxiliary)
    if setting != 'canonical' and not aux_ids:
        raise ConfigurationError(f"le setting {setting} demande au moins un dataset auxiliaire")

    ids = dataset.ids
    if setting == 'transfer':
        return [Split(index=0, train_ids=list(aux_ids), test_ids=list(ids))]

    if len(ids) < n_repeats:
        raise ConfigurationError(f"dataset trop petit: {len(ids)} vidéos pour {n_repeats} folds")

    rng = np.random.default_rng(seed)
    folds = np.array_split(rng.permutation(len(ids)), n_repeats)
    splits = []
    for index, fold in enumerate(folds):
        test = set(fold.tolist())
        train_ids = [vid for i, vid in enumerate(ids) if i not in test]
        if setting == 'augmented':
            train_ids += aux_ids
        splits.append(Split(index=index, train_ids=train_ids,
                            test_ids=[vid for i, vid in enumerate(ids) if i in test]))
    return splits


# ========================================
# PRÉDICTION
# ========================================
def predict_summary(scorer: CSNet,
                    video: VideoRecord,
                    summary_config: Optional[SummaryConfig] = None,
                    segment_config: Optional[SegmentConfig] = None) -> SummarySelection:
    """
    Scores -> plans (change points stockés, sinon KTS) -> knapsack -> masque

    Args:
        scorer: Scorer entraîné
        video: Vidéo à résumer
        summary_config: Budget et pooling
        segment_config: Hyperparamètres KTS si la vidéo n'a pas de change points

    Returns:
        SummarySelection
    """
    scores = score_video(scorer, video.features).scores.numpy()
    seg = video.segmentation
    if seg is None:
        seg = segment_features(video.features, video.picks, video.n_frames, segment_config)
    return generate_summary(scores, video.picks, seg, video.n_frames, summary_config)


def evaluate_videos(scorer: CSNet,
                    videos: Sequence[VideoRecord],
                    kind,
                    split: int = 0,
                    summary_config: Optional[SummaryConfig] = None,
                    segment_config: Optional[SegmentConfig] = None,
                    synthetic_aggregation: str = 'mean') -> List[VideoResult]:
    """Résume et note chaque vidéo de test"""
    results = []
    for video in videos:
        if video.user_summaries is None:
            raise DatasetValidationError([f"{video.id}.user_summaries: requis pour l'évaluation"])
        selection = predict_summary(scorer, video, summary_config, segment_config)
        score = score_against_users(selection.frame_mask, video.user_summaries, kind, synthetic_aggregation)
        results.append(VideoResult(
            split=split,
            video_id=video.id,
            precision=score.precision,
            recall=score.recall,
            fscore=score.fscore,
            selected_frames=selection.selected_frames,
            budget_frames=selection.budget_frames,
        ))
        logger.debug(f"split {split} | {video.id} | F={score.fscore:.2f}")
    return results


# ========================================
# RAPPORT
# ========================================
def report(results: Sequence[VideoResult],
           setting: str = 'canonical',
           n_splits: Optional[int] = None,
           provenance: Optional[Dict[str, Any]] = None) -> EvalReport:
    """
    Agrège les résultats par split puis sur les splits

    Args:
        results: Résultats par vidéo et par split
        setting: Setting d'évaluation
        n_splits: Nombre de splits attendus (vérifie qu'aucun ne manque)
        provenance: Graines, membres des splits, config

    Returns:
        EvalReport
    """
    results = list(results)
    if not results:
        raise ConfigurationError("rapport demandé sans aucun résultat")

    by_split: Dict[int, List[float]] = {}
    for r in results:
        by_split.setdefault(r.split, []).append(r.fscore)
    expected = set(range(n_splits)) if n_splits is not None else set(by_split)
    missing = sorted(expected - set(by_split))
    if missing:
        raise ConfigurationError(f"résultats manquants pour les splits {missing}")

    split_fscores = [float(np.mean(by_split[k])) for k in sorted(by_split)]
    return EvalReport(
        setting=setting,
        results=results,
        split_fscores=split_fscores,
        final_fscore=float(np.mean(split_fscores)),
        provenance=dict(provenance or {}),
    )


def format_report(eval_report: EvalReport) -> str:
    """Tableau lisible : une ligne par split puis le F final"""
    lines = [f"setting: {eval_report.setting}", "", f"{'split':>6} | {'videos':>6} | {'F (%)':>8}", "-" * 28]
    for index, value in enumerate(eval_report.split_fscores):
        n_videos = sum(1 for r in eval_report.results if r.split == index)
        lines.append(f"{index:>6} | {n_videos:>6} | {value:>8.2f}")
    lines.append("-" * 28)
    lines.append(f"{'final':>6} | {len(eval_report.results):>6} | {eval_report.final_fscore:>8.2f}")
    return "\n".join(lines) + "\n"


def write_report(eval_report: EvalReport,
                 output_dir: Union[str, Path],
                 run_config: Optional[Dict[str, Any]] = None) -> Path:
    """
    Écrit results.jsonl (une ligne par vidéo et par split), summary.txt et report.json

    Returns:
        Répertoire du rapport
    """
    output_dir = Path(output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)

    write_jsonl(output_dir / RESULTS_FILE,
                ({'setting': eval_report.setting, **r.to_record()} for r in eval_report.results))

    (output_dir / SUMMARY_FILE).write_text(format_report(eval_report), encoding='utf-8')

    summary = {
        'setting': eval_report.setting,
        'split_fscores': eval_report.split_fscores,
        'final_fscore': eval_report.final_fscore,
        'provenance': eval_report.provenance,
        'run_config': run_config or {},
    }
    (output_dir / REPORT_FILE).write_text(json.dumps(summary, indent=2, sort_keys=True), encoding='utf-8')
    logger.info(f"📝 Rapport écrit: {output_dir} (F={eval_report.final_fscore:.2f}%)")
    return output_dir


# ========================================
# PROTOCOLE COMPLET
# ========================================
def cross_validate(dataset: Dataset,
                   train_config: TrainConfig,
                   eval_config: Optional[EvalConfig] = None,
                   summary_config: Optional[SummaryConfig] = None,
                   segment_config: Optional[SegmentConfig] = None,
                   auxiliary: Sequence[Dataset] = (),
                   checkpoint: Optional[Checkpoint] = None) -> Tuple[EvalReport, List[TrainHistory]]:
    """
    Évalue un dataset selon le protocole de splits

    Avec un checkpoint, le scorer figé note chaque fold de test ; sans, un
    modèle est entraîné sur les ids de train de chaque split.

    Returns:
        (EvalReport, historiques d'entraînement par split)
    """
    eval_config = eval_config or EvalConfig()
    splits = make_splits(dataset, eval_config.setting, eval_config.n_repeats, eval_config.seed, auxiliary)
    pool = {v.id: v for d in (dataset, *auxiliary) for v in d.videos}

    results: List[VideoResult] = []
    histories: List[TrainHistory] = []
    for split in splits:
        if checkpoint is not None:
            scorer = checkpoint.scorer
        else:
            trained, history = train([pool[i] for i in split.train_ids], train_config)
            scorer = trained.scorer
            histories.append(history)
        split_results = evaluate_videos(scorer, dataset.subset(split.test_ids), dataset.kind, split.index,
                                        summary_config, segment_config, eval_config.synthetic_aggregation)
        results.extend(split_results)
        logger.info(f"✂️  split {split.index + 1}/{len(splits)} | "
                    f"F={np.mean([r.fscore for r in split_results]):.2f}%")

    provenance = {
        'dataset': dataset.name,
        'kind': dataset.kind.value,
        'eval_seed': eval_config.seed,
        'train_seed': train_config.seed,
        'checkpoint': str(checkpoint.path) if checkpoint is not None and checkpoint.path else None,
        'splits': [asdict(s) for s in splits],
    }
    return report(results, eval_config.setting, len(splits), provenance), histories


# ========================================
# ABLATION
# ========================================
@dataclass
class AblationRow:
    """Une ligne du tableau d'ablation, une valeur par seed"""
    label: str
    flags: Tuple[bool, bool, bool]
    seeds: List[int] = field(default_factory=list)
    fscores: List[float] = field(default_factory=list)
    score_variances: List[float] = field(default_factory=list)

    @property
    def mean_fscore(self) -> float:
        return float(np.mean(self.fscores)) if self.fscores else 0.0

    @property
    def mean_score_variance(self) -> float:
        return float(np.mean(self.score_variances)) if self.score_variances else 0.0

    def to_record(self) -> Dict[str, Any]:
        csnet, difference, variance = self.flags
        return {
            'label': self.label,
            'csnet': csnet,
            'difference': difference,
            'variance_loss': variance,
            'seeds': self.seeds,
            'fscores': self.fscores,
            'score_variances': self.score_variances,
            'mean_fscore': self.mean_fscore,
            'mean_score_variance': self.mean_score_variance,
        }


def run_ablation(dataset: Dataset,
                 base_config: TrainConfig,
                 seeds: Sequence[int] = (0,),
                 eval_config: Optional[EvalConfig] = None,
                 summary_config: Optional[SummaryConfig] = None,
                 segment_config: Optional[SegmentConfig] = None,
                 auxiliary: Sequence[Dataset] = (),
                 experiments: Optional[Sequence[str]] = None) -> List[AblationRow]:
    """
    Entraîne et évalue les configurations Exp.1..Exp.8 pour chaque seed

    Args:
        experiments: Sous-ensemble d'étiquettes (ex. ['Exp.1', 'Exp.8']) ; None = les 8

    Returns:
        Une AblationRow par expérience retenue, dans l'ordre des expériences
    """
    matrix = ablation_matrix(base_config)
    if experiments is not None:
        unknown = sorted(set(experiments) - {config.label for config in matrix})
        if unknown or not experiments:
            raise ConfigurationError(f"expériences d'ablation inconnues ou vides: {unknown}")
        matrix = [config for config in matrix if config.label in set(experiments)]

    eval_config = replace(eval_config or EvalConfig(), checkpoint=None)
    rows = []
    for config in matrix:
        row = AblationRow(label=config.label, flags=config.flags)
        log_section(logger, f"Ablation {config.label} {config.flags}")
        for seed in seeds:
            eval_report, histories = cross_validate(dataset, replace(config, seed=seed), eval_config,
                                                    summary_config, segment_config, auxiliary)
            row.seeds.append(int(seed))
            row.fscores.append(eval_report.final_fscore)
            row.score_variances.append(float(np.mean([h.score_variances[-1] for h in histories])))
        logger.info(f"🧪 {row.label} | F={row.mean_fscore:.2f}% | var(p)={row.mean_score_variance:.5f}")
        rows.append(row)
    return rows


def format_ablation(rows: Sequence[AblationRow]) -> str:
    """Tableau : expérience, drapeaux, F moyen, variance moyenne des scores"""
    def mark(flag: bool) -> str:
        return 'x' if flag else '-'

    header = f"{'Exp.':<6} | {'CSNet':^5} | {'Diff':^4} | {'VarLoss':^7} | {'F (%)':>7} | {'var(p)':>9}"
    lines = [header, "-" * len(header)]
    for row in rows:
        csnet, difference, variance = row.flags
        lines.append(f"{row.label:<6} | {mark(csnet):^5} | {mark(difference):^4} | {mark(variance):^7} | "
                     f"{row.mean_fscore:>7.2f} | {row.mean_score_variance:>9.5f}")
    return "\n".join(lines) + "\n"


def write_ablation(rows: Sequence[AblationRow],
                   output_dir: Union[str, Path],
                   run_config: Optional[Dict[str, Any]] = None) -> Path:
    """Écrit ablation.jsonl (une ligne par expérience, config en tête) et ablation.txt"""
    output_dir = Path(output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    write_jsonl(output_dir / ABLATION_RESULTS_FILE,
                ({**row.to_record(), 'run_config': run_config or {}} for row in rows))
    (output_dir / ABLATION_TABLE_FILE).write_text(format_ablation(rows), encoding='utf-8')
    logger.info(f"📝 Tableau d'ablation écrit: {output_dir}")
    return output_dir


__all__ = [
    'SETTINGS',
    'AGGREGATIONS',
    'EvalConfig',
    'VideoScore',
    'Split',
    'VideoResult',
    'EvalReport',
    'AblationRow',
    'fscore',
    'aggregation_rule',
    'score_against_users',
    'evaluate_video',
    'make_splits',
    'predict_summary',
    'evaluate_videos',
    'report',
    'format_report',
    'write_report',
    'cross_validate',
    'run_ablation',
    'format_ablation',
    'write_ablation',
]
