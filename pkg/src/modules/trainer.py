"""
Module d'entraînement
Boucle VAE-GAN alternée générateur/discriminateur, planning du learning rate,
checkpoints et matrice d'ablation
"""

import json
import time
from dataclasses import asdict, dataclass, field, fields, replace
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import torch
import torch.nn.functional as F

from src.modules.adversarial import (
    RECON_MODES,
    VARIANCE_MODES,
    LossBundle,
    TrainWeights,
    VaeGan,
    VaeGanConfig,
    adversarial_objectives,
    discriminator_loss,
    sparsity_loss,
    variance_loss,
    weight_features,
)
from src.modules.csnet import CSNet, CSNetConfig, score_video
from src.modules.dataio import VideoRecord
from src.utils import JsonlLog, format_metrics, log_section, setup_logger
from src.utils.errors import CheckpointNotFoundError, ConfigurationError, NumericError
from src.utils.tensor_file import read_tensor, write_tensor


logger = setup_logger(__name__)

PARAMS_FILE = 'params.json'
TRAIN_LOG_FILE = 'train_log.jsonl'

# Ordre des expériences d'ablation : (chunk/stride, difference, variance loss)
ABLATION_FLAGS = [
    (False, False, False),
    (True, False, False),
    (False, True, False),
    (False, False, True),
    (True, True, False),
    (True, False, True),
    (False, True, True),
    (True, True, True),
]


@dataclass
class TrainConfig:
    """Configuration complète d'un entraînement"""
    max_epochs: int = 20
    base_lr: float = 1e-4
    lr_decay: float = 0.1
    lr_decay_epoch: int = 10
    discriminator_lr: Optional[float] = None   # None = base_lr
    grad_clip: float = 5.0
    seed: int = 0
    use_csnet: bool = True
    use_difference: bool = True
    use_variance_loss: bool = True
    supervised: bool = False
    variance_mode: str = 'median'
    variance_on_streams: bool = False
    recon_mode: str = 'feature'
    label: str = ''
    weights: TrainWeights = field(default_factory=TrainWeights)
    csnet: CSNetConfig = field(default_factory=CSNetConfig)
    vaegan: VaeGanConfig = field(default_factory=VaeGanConfig)

    def __post_init__(self):
        errors = []
        if self.max_epochs < 1:
            errors.append("max_epochs doit être >= 1")
        if self.base_lr <= 0:
            errors.append(f"base_lr doit être > 0 (reçu {self.base_lr})")
        if self.discriminator_lr is not None and self.discriminator_lr <= 0:
            errors.append("discriminator_lr doit être > 0")
        if not 0 < self.lr_decay <= 1:
            errors.append("lr_decay hors de ]0, 1]")
        if self.grad_clip <= 0:
            errors.append("grad_clip doit être > 0")
        if self.variance_mode not in VARIANCE_MODES:
            errors.append(f"variance_mode inconnu: {self.variance_mode}")
        if self.recon_mode not in RECON_MODES:
            errors.append(f"recon_mode inconnu: {self.recon_mode}")
        if self.csnet.input_dim != self.vaegan.feature_dim:
            errors.append(f"csnet.input_dim={self.csnet.input_dim} != vaegan.feature_dim={self.vaegan.feature_dim}")
        if errors:
            raise ConfigurationError("TrainConfig invalide :\n" + "\n".join(f"  - {e}" for e in errors))

    @property
    def flags(self) -> Tuple[bool, bool, bool]:
        return (self.use_csnet, self.use_difference, self.use_variance_loss)

    def scorer_config(self) -> CSNetConfig:
        return replace(self.csnet, use_chunk_stride=self.use_csnet, use_difference=self.use_difference)

    def for_feature_dim(self, feature_dim: int) -> 'TrainConfig':
        """Copie dont les dimensions d'entrée correspondent au dataset"""
        return replace(self,
                       csnet=replace(self.csnet, input_dim=feature_dim),
                       vaegan=replace(self.vaegan, feature_dim=feature_dim))

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data['csnet']['strides'] = list(self.csnet.strides)
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'TrainConfig':
        data = dict(data)
        nested = {
            'weights': TrainWeights(**data.pop('weights', {})),
            'csnet': CSNetConfig(**data.pop('csnet', {})),
            'vaegan': VaeGanConfig(**data.pop('vaegan', {})),
        }
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigurationError(f"clés TrainConfig inconnues: {sorted(unknown)}")
        return cls(**data, **nested)


@dataclass
class EpochRecord:
    """Moyennes d'une epoch"""
    epoch: int
    lr: float
    losses: Dict[str, float]
    score_variance: float
    seconds: float

    def to_record(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass
class TrainHistory:
    """Trace d'entraînement, une entrée par epoch"""
    epochs: List[EpochRecord] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.epochs)

    @property
    def score_variances(self) -> List[float]:
        return [e.score_variance for e in self.epochs]

    @property
    def learning_rates(self) -> List[float]:
        return [e.lr for e in self.epochs]

    def loss_trace(self) -> List[Dict[str, float]]:
        return [e.losses for e in self.epochs]


@dataclass
class TrainState:
    """Réseaux, optimiseurs et générateur de bruit"""
    scorer: CSNet
    vaegan: VaeGan
    generator_optimizer: torch.optim.Optimizer
    discriminator_optimizer: torch.optim.Optimizer
    noise: torch.Generator
    epoch: int = 0


@dataclass
class Checkpoint:
    """Scorer + VAE-GAN entraînés et leur configuration"""
    scorer: CSNet
    vaegan: VaeGan
    config: TrainConfig
    path: Optional[Path] = None
    metadata: Dict[str, Any] = field(default_factory=dict)


# ========================================
# PLANNING
# ========================================
def lr_schedule(epoch: int, config: TrainConfig, base_lr: Optional[float] = None) -> float:
    """
    Learning rate de l'epoch : base_lr, puis base_lr * lr_decay à partir de lr_decay_epoch

    Args:
        epoch: Epoch (0-indexée)
        config: Configuration d'entraînement
        base_lr: Remplace config.base_lr (utilisé pour le discriminateur)

    Returns:
        Learning rate
    """
    if not 0 <= epoch < config.max_epochs:
        raise ConfigurationError(f"epoch {epoch} hors de [0, {config.max_epochs})")
    lr = config.base_lr if base_lr is None else base_lr
    return lr * config.lr_decay if epoch >= config.lr_decay_epoch else lr


def _set_lr(optimizer: torch.optim.Optimizer, lr: float) -> None:
    for group in optimizer.param_groups:
        group['lr'] = lr


def build_models(config: TrainConfig) -> Tuple[CSNet, VaeGan]:
    """Initialise scorer et VAE-GAN de façon déterministe (seed du config)"""
    torch.manual_seed(config.seed)
    return CSNet(config.scorer_config()), VaeGan(config.vaegan)


def build_state(config: TrainConfig) -> TrainState:
    """Réseaux + optimiseurs Adam (moments par défaut)"""
    scorer, vaegan = build_models(config)
    generator_params = list(scorer.parameters()) + list(vaegan.vae.parameters())
    discriminator_lr = config.discriminator_lr or config.base_lr
    return TrainState(
        scorer=scorer,
        vaegan=vaegan,
        generator_optimizer=torch.optim.Adam(generator_params, lr=config.base_lr),
        discriminator_optimizer=torch.optim.Adam(vaegan.discriminator.parameters(), lr=discriminator_lr),
        noise=torch.Generator().manual_seed(config.seed),
    )


# ========================================
# PAS D'ENTRAÎNEMENT
# ========================================
def train_step(video: VideoRecord, state: TrainState, config: TrainConfig) -> LossBundle:
    """
    Une mise à jour alternée sur une vidéo

    (1) scorer + VAE minimisent la somme pondérée des termes (+ BCE supervisée) ;
    (2) le discriminateur minimise L_gan_D. Gradients clippés à grad_clip.

    Args:
        video: Vidéo d'entraînement
        state: Réseaux et optimiseurs
        config: Configuration

    Returns:
        LossBundle évalué avant la mise à jour (tenseurs détachés)

    Raises:
        ConfigurationError: Si supervised sans gtscore
        NumericError: Si une loss n'est pas finie
    """
    if config.supervised and video.gtscore is None:
        raise ConfigurationError(f"{video.id}: entraînement supervisé sans gtscore")

    context = {'epoch': state.epoch, 'video': video.id}
    weights = config.weights
    dtype = next(state.scorer.parameters()).dtype
    x = torch.as_tensor(video.features, dtype=dtype)

    state.scorer.train()
    state.vaegan.train()

    out = state.scorer(x)
    p = out.scores
    l_var = variance_loss(p, weights.eps, config.variance_mode)
    if config.variance_on_streams and config.use_csnet:
        l_var = (l_var
                 + variance_loss(out.chunk_scores, weights.eps, config.variance_mode)
                 + variance_loss(out.stride_scores, weights.eps, config.variance_mode)) / 3.0
    l_sparsity = sparsity_loss(p, weights.sparsity_target)

    x_hat, mu, log_variance = state.vaegan.vae(weight_features(x, p), generator=state.noise)
    # entrée "fausse" : scores uniformes, utilisée uniquement par le discriminateur
    with torch.no_grad():
        uniform = torch.rand(x.shape[0], generator=state.noise, dtype=dtype)
        x_hat_uniform, _, _ = state.vaegan.vae(weight_features(x, uniform), generator=state.noise)

    try:
        bundle = adversarial_objectives(x, x_hat, x_hat_uniform, mu, log_variance, state.vaegan,
                                        l_var, l_sparsity, config.recon_mode)
    except NumericError as e:
        raise NumericError(str(e), {**e.context, **context}) from e

    generator_loss = (weights.lambda_sparsity * bundle.sparsity
                      + weights.lambda_recon * bundle.reconstruction
                      + weights.lambda_prior * bundle.prior
                      + weights.lambda_gan * bundle.gan_generator)
    if config.use_variance_loss:
        generator_loss = generator_loss + weights.lambda_var * bundle.variance
    if config.supervised:
        target = torch.as_tensor(video.gtscore, dtype=dtype)
        generator_loss = generator_loss + F.binary_cross_entropy(p, target)

    if not torch.isfinite(generator_loss):
        raise NumericError("loss générateur non finie", context)

    state.generator_optimizer.zero_grad()
    generator_loss.backward()
    torch.nn.utils.clip_grad_norm_(
        [p for group in state.generator_optimizer.param_groups for p in group['params']],
        config.grad_clip,
    )
    state.generator_optimizer.step()

    # Discriminateur : entrées détachées
    state.discriminator_optimizer.zero_grad()
    d_loss = discriminator_loss(x, x_hat.detach(), x_hat_uniform, state.vaegan)
    if not torch.isfinite(d_loss):
        raise NumericError("loss discriminateur non finie", context)
    d_loss.backward()
    torch.nn.utils.clip_grad_norm_(state.vaegan.discriminator.parameters(), config.grad_clip)
    state.discriminator_optimizer.step()

    return LossBundle(**{name: value.detach() for name, value in vars(bundle).items()})


def mean_score_variance(scorer: CSNet, videos: Sequence[VideoRecord]) -> float:
    """Moyenne sur les vidéos de la variance des scores prédits"""
    variances = [float(np.var(score_video(scorer, v.features).scores.numpy())) for v in videos]
    return float(np.mean(variances))


# ========================================
# BOUCLE
# ========================================
def train(videos: Sequence[VideoRecord],
          config: TrainConfig,
          output_dir: Optional[Union[str, Path]] = None,
          metadata: Optional[Dict[str, Any]] = None) -> Tuple[Checkpoint, TrainHistory]:
    """
    Entraîne scorer et VAE-GAN sur une liste de vidéos

    Les vidéos sont parcourues dans un ordre mélangé (seedé) à chaque epoch.
    Si output_dir est fourni, le checkpoint et train_log.jsonl y sont écrits.

    Args:
        videos: Vidéos d'entraînement (non vide)
        config: Configuration
        output_dir: Répertoire du checkpoint
        metadata: Métadonnées additionnelles pour params.json (run config, ...)

    Returns:
        (Checkpoint, TrainHistory)
    """
    videos = list(videos)
    if not videos:
        raise ConfigurationError("entraînement sur un dataset vide")
    dims = {v.feature_dim for v in videos}
    if dims != {config.csnet.input_dim}:
        raise ConfigurationError(f"dimension de features {sorted(dims)} != csnet.input_dim={config.csnet.input_dim}")

    label = config.label or 'train'
    log_section(logger, f"Entraînement {label} ({len(videos)} vidéos, {config.max_epochs} epochs)")

    state = build_state(config)
    order_rng = np.random.default_rng(config.seed)
    history = TrainHistory()
    discriminator_lr = config.discriminator_lr or config.base_lr

    log_file = None
    if output_dir is not None:
        output_dir = Path(output_dir)
        output_dir.mkdir(parents=True, exist_ok=True)
        log_file = JsonlLog(output_dir / TRAIN_LOG_FILE)

    try:
        for epoch in range(config.max_epochs):
            started = time.perf_counter()
            state.epoch = epoch
            lr = lr_schedule(epoch, config)
            _set_lr(state.generator_optimizer, lr)
            _set_lr(state.discriminator_optimizer, lr_schedule(epoch, config, discriminator_lr))

            totals: Dict[str, float] = {}
            for index in order_rng.permutation(len(videos)):
                bundle = train_step(videos[index], state, config)
                for name, value in bundle.as_floats().items():
                    totals[name] = totals.get(name, 0.0) + value
                logger.debug(f"epoch {epoch} | {videos[index].id} | {bundle.as_floats()}")

            record = EpochRecord(
                epoch=epoch,
                lr=lr,
                losses={name: total / len(videos) for name, total in totals.items()},
                score_variance=mean_score_variance(state.scorer, videos),
                seconds=time.perf_counter() - started,
            )
            history.epochs.append(record)
            logger.info(f"📈 epoch {epoch + 1}/{config.max_epochs} | lr={lr:.1e} | "
                        f"{format_metrics(record.losses)} | var(p)={record.score_variance:.5f}")
            if log_file is not None:
                log_file.write(record.to_record())
    finally:
        if log_file is not None:
            log_file.close()

    checkpoint = Checkpoint(scorer=state.scorer, vaegan=state.vaegan, config=config,
                            metadata=dict(metadata or {}))
    if output_dir is not None:
        save_checkpoint(checkpoint, output_dir)
    return checkpoint, history


# ========================================
# CHECKPOINTS
# ========================================
def save_checkpoint(checkpoint: Checkpoint, path: Union[str, Path]) -> Path:
    """
    Écrit les tenseurs nommés (.ten) et params.json (écho du config + métadonnées)

    Args:
        checkpoint: Checkpoint à sauvegarder
        path: Répertoire de destination

    Returns:
        Chemin du checkpoint
    """
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    for prefix, module in (('scorer', checkpoint.scorer), ('vaegan', checkpoint.vaegan)):
        for key, tensor in module.state_dict().items():
            write_tensor(path / f"{prefix}.{key}.ten", tensor.detach().cpu().numpy())

    params = {
        'config': checkpoint.config.to_dict(),
        'created': datetime.now().isoformat(timespec='seconds'),
        'seed': checkpoint.config.seed,
        'torch_version': torch.__version__,
        'metadata': checkpoint.metadata,
    }
    (path / PARAMS_FILE).write_text(json.dumps(params, indent=2, sort_keys=True), encoding='utf-8')
    checkpoint.path = path
    logger.info(f"💾 Checkpoint écrit: {path}")
    return path


def load_checkpoint(path: Union[str, Path]) -> Checkpoint:
    """
    Reconstruit scorer et VAE-GAN depuis un répertoire de checkpoint

    Raises:
        CheckpointNotFoundError: Si params.json ou un tenseur est absent
    """
    path = Path(path)
    params_path = path / PARAMS_FILE
    if not params_path.exists():
        raise CheckpointNotFoundError(path)
    params = json.loads(params_path.read_text(encoding='utf-8'))
    config = TrainConfig.from_dict(params['config'])

    scorer, vaegan = build_models(config)
    for prefix, module in (('scorer', scorer), ('vaegan', vaegan)):
        state = {}
        for key, reference in module.state_dict().items():
            tensor_path = path / f"{prefix}.{key}.ten"
            if not tensor_path.exists():
                raise CheckpointNotFoundError(tensor_path)
            state[key] = torch.from_numpy(read_tensor(tensor_path)).to(reference.dtype)
        module.load_state_dict(state)

    scorer.eval()
    vaegan.eval()
    logger.info(f"📂 Checkpoint chargé: {path}")
    return Checkpoint(scorer=scorer, vaegan=vaegan, config=config, path=path,
                      metadata=params.get('metadata', {}))


# ========================================
# ABLATION
# ========================================
def ablation_matrix(base: Optional[TrainConfig] = None) -> List[TrainConfig]:
    """
    Les 8 combinaisons (chunk/stride, difference, variance loss), Exp.1 à Exp.8

    Exp.1 désactive tout (LSTM simple sans chunk ni stride), Exp.8 active tout.

    Args:
        base: Configuration de départ (défaut TrainConfig())

    Returns:
        Liste de 8 TrainConfig étiquetés
    """
    base = base or TrainConfig()
    return [
        replace(base, use_csnet=csnet, use_difference=difference, use_variance_loss=variance,
                label=f"Exp.{index}")
        for index, (csnet, difference, variance) in enumerate(ABLATION_FLAGS, 1)
    ]


__all__ = [
    'ABLATION_FLAGS',
    'TrainConfig',
    'EpochRecord',
    'TrainHistory',
    'TrainState',
    'Checkpoint',
    'lr_schedule',
    'build_models',
    'build_state',
    'train_step',
    'mean_score_variance',
    'train',
    'save_checkpoint',
    'load_checkpoint',
    'ablation_matrix',
]
