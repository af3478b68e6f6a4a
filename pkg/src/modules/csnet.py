"""
Module CSNet (chunk and stride network)
Score d'importance par frame : deux flux récurrents bidirectionnels (chunk local,
stride global), attention par différences de features, fusion pondérée
"""

import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import torch
import torch.nn as nn

from src.utils import setup_logger
from src.utils.errors import ConfigurationError, NumericError, ShapeError


logger = setup_logger(__name__)

BOUNDARY_MODES = ('zero_pad', 'clamp')
FUSION_MODES = ('convex', 'affine')

# bornes de clamp de la fusion affine
_AFFINE_EPS = 1e-6


@dataclass
class CSNetConfig:
    """Hyperparamètres structurels du scorer"""
    n_divisions: int = 4                  # M
    input_dim: int = 1024                 # D_in
    hidden_dim: int = 256                 # D_h
    strides: Tuple[int, ...] = (1, 2, 4)
    boundary_mode: str = 'zero_pad'
    fusion_mode: str = 'convex'
    share_streams: bool = False
    use_chunk_stride: bool = True         # False : LSTM simple sans chunk ni stride
    use_difference: bool = True

    def __post_init__(self):
        self.strides = tuple(int(s) for s in self.strides)
        errors = []
        if self.n_divisions < 1:
            errors.append("n_divisions (M) doit être >= 1")
        if self.input_dim < 1 or self.hidden_dim < 1:
            errors.append("input_dim et hidden_dim doivent être >= 1")
        if any(s < 1 for s in self.strides) or len(set(self.strides)) != len(self.strides):
            errors.append(f"strides doivent être positifs et distincts: {self.strides}")
        if self.boundary_mode not in BOUNDARY_MODES:
            errors.append(f"boundary_mode inconnu: {self.boundary_mode}")
        if self.fusion_mode not in FUSION_MODES:
            errors.append(f"fusion_mode inconnu: {self.fusion_mode}")
        if errors:
            raise ConfigurationError("CSNetConfig invalide :\n" + "\n".join(f"  - {e}" for e in errors))


@dataclass
class ScoreSequence:
    """Scores d'importance p_t d'une vidéo, avec les scores de chaque flux et d_t"""
    scores: torch.Tensor           # p   [T_s]
    chunk_scores: torch.Tensor     # p1  [T_s]
    stride_scores: torch.Tensor    # p2  [T_s]
    attention: torch.Tensor        # d   [T_s]

    def __len__(self) -> int:
        return int(self.scores.shape[0])


# ========================================
# PARTITIONS
# ========================================
def _padded_length(n_steps: int, n_divisions: int) -> int:
    return math.ceil(n_steps / n_divisions) * n_divisions


def pad_to_multiple(x: torch.Tensor, n_divisions: int) -> torch.Tensor:
    """Ajoute des lignes nulles pour que la longueur soit un multiple de M"""
    n_steps = x.shape[0]
    if n_divisions > n_steps:
        raise ConfigurationError(f"M={n_divisions} > T_s={n_steps}")
    n_pad = _padded_length(n_steps, n_divisions) - n_steps
    if n_pad == 0:
        return x
    return torch.cat([x, x.new_zeros((n_pad,) + tuple(x.shape[1:]))], dim=0)


def chunk_partition(x: torch.Tensor, n_divisions: int) -> List[torch.Tensor]:
    """
    Découpe en M blocs consécutifs (vue locale)

    La m-ième partie contient les lignes m*(L/M) .. (m+1)*(L/M) - 1 de la
    séquence complétée par des zéros à la longueur L multiple de M.

    Args:
        x: Tenseur [T_s x ...]
        n_divisions: M

    Returns:
        Liste de M tenseurs [L/M x ...]
    """
    padded = pad_to_multiple(x, n_divisions)
    return list(torch.chunk(padded, n_divisions, dim=0))


def stride_partition(x: torch.Tensor, n_divisions: int) -> List[torch.Tensor]:
    """
    Découpe en M sous-séquences entrelacées d'intervalle k = M (vue globale)

    La m-ième partie contient les lignes m, m + M, m + 2M, ...

    Args:
        x: Tenseur [T_s x ...]
        n_divisions: M

    Returns:
        Liste de M tenseurs [L/M x ...]
    """
    padded = pad_to_multiple(x, n_divisions)
    return [padded[m::n_divisions] for m in range(n_divisions)]


def part_lengths(n_steps: int, n_divisions: int, mode: str) -> List[int]:
    """
    Nombre de lignes réelles (hors padding) de chaque partie

    Les lignes réelles forment toujours un préfixe de la partie. Une partie
    entièrement en padding (chunk, M proche de T_s) compte 0.
    """
    part = _padded_length(n_steps, n_divisions) // n_divisions
    if mode == 'chunk':
        return [min(max(n_steps - m * part, 0), part) for m in range(n_divisions)]
    if mode == 'stride':
        return [len(range(m, n_steps, n_divisions)) for m in range(n_divisions)]
    raise ConfigurationError(f"mode de partition inconnu: {mode}")


def reassemble(parts: Sequence[torch.Tensor], mode: str, n_steps: int, n_divisions: int) -> torch.Tensor:
    """
    Remet des valeurs par frame partitionnées dans l'ordre original

    Les lignes de padding sont supprimées.

    Args:
        parts: M tenseurs [L/M x ...] produits par la partition correspondante
        mode: 'chunk' ou 'stride'
        n_steps: T_s d'origine
        n_divisions: M

    Returns:
        Tenseur [T_s x ...]

    Raises:
        ShapeError: Si le nombre ou la longueur des parties est incohérent
    """
    expected = _padded_length(n_steps, n_divisions) // n_divisions
    if len(parts) != n_divisions or any(p.shape[0] != expected for p in parts):
        raise ShapeError(
            f"{len(parts)} parties de longueurs {[p.shape[0] for p in parts]}, "
            f"{n_divisions} x {expected} attendues"
        )
    if mode == 'chunk':
        merged = torch.cat(list(parts), dim=0)
    elif mode == 'stride':
        stacked = torch.stack(list(parts), dim=1)   # [L/M x M x ...]
        merged = stacked.reshape((-1,) + tuple(stacked.shape[2:]))
    else:
        raise ConfigurationError(f"mode de réassemblage inconnu: {mode}")
    return merged[:n_steps]


# ========================================
# ATTENTION PAR DIFFÉRENCES
# ========================================
def temporal_differences(x: torch.Tensor, stride: int, boundary_mode: str = 'zero_pad') -> torch.Tensor:
    """
    |x_{t+k} - x_t| par élément

    Pour t + k hors séquence : 0 (zero_pad) ou différence avec la dernière frame (clamp).

    Args:
        x: Features [T_s x D]
        stride: k
        boundary_mode: 'zero_pad' ou 'clamp'

    Returns:
        Tenseur [T_s x D]
    """
    n_steps = x.shape[0]
    if boundary_mode == 'zero_pad':
        diff = x.new_zeros(x.shape)
        if stride < n_steps:
            diff = torch.cat([torch.abs(x[stride:] - x[:-stride]), diff[n_steps - stride:]], dim=0)
        return diff
    if boundary_mode == 'clamp':
        tail = x[-1:].expand(min(stride, n_steps), -1)
        shifted = torch.cat([x[stride:], tail], dim=0)[:n_steps]
        return torch.abs(shifted - x)
    raise ConfigurationError(f"boundary_mode inconnu: {boundary_mode}")


def difference_attention(x: torch.Tensor,
                         projections: Sequence[nn.Linear],
                         strides: Sequence[int],
                         boundary_mode: str = 'zero_pad') -> torch.Tensor:
    """
    d_t = sum_k FC_k(|x_{t+k} - x_t|)

    Args:
        x: Features [T_s x D]
        projections: Une couche D -> 1 par stride
        strides: Strides temporels (ex. 1, 2, 4)
        boundary_mode: Traitement de t + k hors séquence

    Returns:
        Vecteur d [T_s]
    """
    if len(projections) != len(strides):
        raise ShapeError(f"{len(projections)} projections pour {len(strides)} strides")
    attention = x.new_zeros(x.shape[0])
    for projection, stride in zip(projections, strides):
        attention = attention + projection(temporal_differences(x, stride, boundary_mode)).squeeze(-1)
    return attention


# ========================================
# RÉSEAU
# ========================================
def _uniform_init(module: nn.Module) -> None:
    """Initialisation uniforme dans [-a, a], a = 1/sqrt(fan_in) ; fan_in = hidden pour les LSTM"""
    if isinstance(module, nn.Linear):
        bound = 1.0 / math.sqrt(module.in_features)
        nn.init.uniform_(module.weight, -bound, bound)
        nn.init.uniform_(module.bias, -bound, bound)
    elif isinstance(module, nn.LSTM):
        bound = 1.0 / math.sqrt(module.hidden_size)
        for weight in module.parameters():
            nn.init.uniform_(weight, -bound, bound)


class ScoringStream(nn.Module):
    """Bi-LSTM + FC : pré-activation scalaire par frame, poids partagés entre les M divisions"""

    def __init__(self, hidden_dim: int):
        super().__init__()
        self.lstm = nn.LSTM(hidden_dim, hidden_dim, batch_first=True, bidirectional=True)
        self.head = nn.Linear(2 * hidden_dim, 1)

    def forward(self, parts: torch.Tensor, lengths: Optional[Sequence[int]] = None) -> torch.Tensor:
        """
        Args:
            parts: [M x L/M x D_h]
            lengths: Lignes réelles de chaque partie ; le padding ne traverse pas le LSTM
        Return:
            pré-activations [M x L/M] (valeurs arbitraires sur le padding)
        """
        if lengths is None:
            hidden, _ = self.lstm(parts)
        else:
            # pack_padded_sequence refuse les longueurs nulles ; une partie vide est ignorée au réassemblage
            packed = nn.utils.rnn.pack_padded_sequence(
                parts, torch.tensor([max(n, 1) for n in lengths], dtype=torch.int64),
                batch_first=True, enforce_sorted=False,
            )
            hidden, _ = nn.utils.rnn.pad_packed_sequence(self.lstm(packed)[0], batch_first=True,
                                                         total_length=parts.shape[1])
        return self.head(hidden).squeeze(-1)


class CSNet(nn.Module):
    """
    Scorer chunk/stride avec attention par différences

    p1_t = sigmoid(c'_t + d_t), p2_t = sigmoid(s'_t + d_t), p_t = fusion(p1_t, p2_t).
    Sans chunk/stride, un seul flux LSTM traite la séquence entière et p_t = p1_t.
    """

    def __init__(self, config: CSNetConfig):
        super().__init__()
        self.config = config
        self.input_projection = nn.Linear(config.input_dim, config.hidden_dim)
        self.chunk_stream = ScoringStream(config.hidden_dim)
        self.stride_stream = self.chunk_stream if config.share_streams else ScoringStream(config.hidden_dim)
        self.difference_projections = nn.ModuleList(
            [nn.Linear(config.input_dim, 1) for _ in config.strides]
        )
        self.apply(_uniform_init)

        # convex : logits normalisés par softmax (init 0 -> poids 0.5/0.5) ; affine : W bruts
        init = 0.0 if config.fusion_mode == 'convex' else 0.5
        self.fusion = nn.Parameter(torch.full((2,), init))

        logger.debug(
            f"CSNet initialisé (M={config.n_divisions}, D_in={config.input_dim}, "
            f"D_h={config.hidden_dim}, chunk/stride={config.use_chunk_stride}, "
            f"difference={config.use_difference})"
        )

    def fusion_weights(self) -> torch.Tensor:
        """(w1, w2) effectivement appliqués à (p1, p2)"""
        if self.config.fusion_mode == 'convex':
            return torch.softmax(self.fusion, dim=0)
        return self.fusion

    def fuse(self, chunk_scores: torch.Tensor, stride_scores: torch.Tensor) -> torch.Tensor:
        w = self.fusion_weights()
        fused = w[0] * chunk_scores + w[1] * stride_scores
        if self.config.fusion_mode == 'affine':
            fused = torch.clamp(fused, _AFFINE_EPS, 1.0 - _AFFINE_EPS)
        return fused

    def attention(self, x: torch.Tensor) -> torch.Tensor:
        if not self.config.use_difference:
            return x.new_zeros(x.shape[0])
        return difference_attention(x, self.difference_projections, self.config.strides,
                                    self.config.boundary_mode)

    def _stream_logits(self, stream: ScoringStream, h: torch.Tensor, mode: str) -> torch.Tensor:
        n_steps, n_divisions = h.shape[0], self.config.n_divisions
        partition = chunk_partition if mode == 'chunk' else stride_partition
        parts = torch.stack(partition(h, n_divisions), dim=0)
        logits = stream(parts, part_lengths(n_steps, n_divisions, mode))
        return reassemble(list(logits.unbind(0)), mode, n_steps, n_divisions)

    def forward(self, x: torch.Tensor) -> ScoreSequence:
        """
        Args:
            x: Features [T_s x D_in]
        Return:
            ScoreSequence de longueur T_s
        """
        if x.ndim != 2 or x.shape[1] != self.config.input_dim:
            raise ShapeError(f"features [T_s x {self.config.input_dim}] attendues, reçu {tuple(x.shape)}")

        h = self.input_projection(x)
        attention = self.attention(x)

        if self.config.use_chunk_stride:
            chunk_logits = self._stream_logits(self.chunk_stream, h, 'chunk')
            stride_logits = self._stream_logits(self.stride_stream, h, 'stride')
            chunk_scores = torch.sigmoid(chunk_logits + attention)
            stride_scores = torch.sigmoid(stride_logits + attention)
            scores = self.fuse(chunk_scores, stride_scores)
        else:
            logits = self.chunk_stream(h.unsqueeze(0)).squeeze(0)
            chunk_scores = stride_scores = scores = torch.sigmoid(logits + attention)

        finite = torch.isfinite(scores)
        if not bool(finite.all()):
            frame = int((~finite).nonzero()[0, 0])
            raise NumericError("activation non finie dans CSNet", {'frame': frame})

        return ScoreSequence(scores=scores, chunk_scores=chunk_scores,
                             stride_scores=stride_scores, attention=attention)


def score_video(model: CSNet, features) -> ScoreSequence:
    """Inférence sans gradient sur une séquence de features numpy ou torch"""
    param = next(model.parameters())
    x = torch.as_tensor(features, dtype=param.dtype, device=param.device)
    was_training = model.training
    model.eval()
    with torch.no_grad():
        out = model(x)
    model.train(was_training)
    return out


__all__ = [
    'BOUNDARY_MODES',
    'FUSION_MODES',
    'CSNetConfig',
    'ScoreSequence',
    'pad_to_multiple',
    'chunk_partition',
    'stride_partition',
    'part_lengths',
    'reassemble',
    'temporal_differences',
    'difference_attention',
    'ScoringStream',
    'CSNet',
    'score_video',
]
