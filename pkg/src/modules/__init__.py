"""
Module principal contenant tous les composants de vidsum
"""

# Dataset bundles
from .dataio import (
    Dataset,
    DatasetKind,
    SyntheticSpec,
    VideoRecord,
    Violation,
    generate_synthetic,
    load_dataset,
    validate,
    write_dataset,
)

# Scorer chunk/stride
from .csnet import (
    CSNet,
    CSNetConfig,
    ScoreSequence,
    score_video,
)

# VAE-GAN et losses
from .adversarial import (
    LossBundle,
    TrainWeights,
    VaeGan,
    VaeGanConfig,
    variance_loss,
)

# Entraînement
from .trainer import (
    Checkpoint,
    TrainConfig,
    TrainHistory,
    ablation_matrix,
    load_checkpoint,
    lr_schedule,
    save_checkpoint,
    train,
)

# Segmentation et sélection
from .segment import (
    SegmentConfig,
    ShotSegmentation,
    kts_changepoints,
    segment_features,
)
from .summarize import (
    SummaryConfig,
    SummarySelection,
    generate_summary,
    knapsack_select,
)

# Évaluation
from .evaluator import (
    EvalConfig,
    EvalReport,
    cross_validate,
    evaluate_video,
    fscore,
    make_splits,
    predict_summary,
    report,
    run_ablation,
    write_ablation,
    write_report,
)

# Graphiques
from .plotting import (
    PlotConfig,
    write_plots,
)

__all__ = [
    # Dataset bundles
    'Dataset',
    'DatasetKind',
    'SyntheticSpec',
    'VideoRecord',
    'Violation',
    'generate_synthetic',
    'load_dataset',
    'validate',
    'write_dataset',

    # Scorer
    'CSNet',
    'CSNetConfig',
    'ScoreSequence',
    'score_video',

    # VAE-GAN
    'LossBundle',
    'TrainWeights',
    'VaeGan',
    'VaeGanConfig',
    'variance_loss',

    # Entraînement
    'Checkpoint',
    'TrainConfig',
    'TrainHistory',
    'ablation_matrix',
    'load_checkpoint',
    'lr_schedule',
    'save_checkpoint',
    'train',

    # Segmentation et sélection
    'SegmentConfig',
    'ShotSegmentation',
    'kts_changepoints',
    'segment_features',
    'SummaryConfig',
    'SummarySelection',
    'generate_summary',
    'knapsack_select',

    # Évaluation
    'EvalConfig',
    'EvalReport',
    'cross_validate',
    'evaluate_video',
    'fscore',
    'make_splits',
    'predict_summary',
    'report',
    'run_ablation',
    'write_ablation',
    'write_report',

    # Graphiques
    'PlotConfig',
    'write_plots',
]
