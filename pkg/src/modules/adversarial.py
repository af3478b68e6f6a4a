"""
Module adversarial (VAE-GAN)
Objectifs d'entraînement : sélection pondérée des features, reconstruction,
prior, GAN, sparsité et variance loss anti-effondrement
"""

import math
from dataclasses import dataclass
from typing import Dict, Optional, Tuple

import torch
import torch.nn as nn
import torch.nn.functional as F

from src.utils import setup_logger
from src.utils.errors import ConfigurationError, NumericError, ShapeError


logger = setup_logger(__name__)

VARIANCE_MODES = ('median', 'mean')
RECON_MODES = ('feature', 'mse')


@dataclass
class TrainWeights:
    """Poids des termes de la loss du générateur"""
    lambda_var: float = 1.0
    lambda_sparsity: float = 1.0
    lambda_recon: float = 1.0
    lambda_prior: float = 1.0
    lambda_gan: float = 1.0
    sparsity_target: float = 0.3   # sigma
    eps: float = 1e-8

    def __post_init__(self):
        errors = [f"{name} doit être >= 0" for name in
                  ('lambda_var', 'lambda_sparsity', 'lambda_recon', 'lambda_prior', 'lambda_gan')
                  if getattr(self, name) < 0]
        if not 0.0 < self.sparsity_target < 1.0:
            errors.append(f"sparsity_target hors de ]0, 1[: {self.sparsity_target}")
        if self.eps <= 0:
            errors.append("eps doit être > 0")
        if errors:
            raise ConfigurationError("TrainWeights invalide :\n" + "\n".join(f"  - {e}" for e in errors))


@dataclass
class VaeGanConfig:
    """Dimensions du VAE et du discriminateur"""
    feature_dim: int = 1024
    hidden_dim: int = 256
    latent_dim: int = 128
    discriminator_dim: int = 256

    def __post_init__(self):
        for name in ('feature_dim', 'hidden_dim', 'latent_dim', 'discriminator_dim'):
            if getattr(self, name) < 1:
                raise ConfigurationError(f"vaegan.{name} doit être >= 1")


@dataclass
class LossBundle:
    """Les six termes de loss d'un pas (tenseurs scalaires)"""
    variance: torch.Tensor
    sparsity: torch.Tensor
    reconstruction: torch.Tensor
    prior: torch.Tensor
    gan_generator: torch.Tensor
    gan_discriminator: torch.Tensor

    def as_floats(self) -> Dict[str, float]:
        return {
            'L_var': float(self.variance.detach()),
            'L_sparsity': float(self.sparsity.detach()),
            'L_recon': float(self.reconstruction.detach()),
            'L_prior': float(self.prior.detach()),
            'L_gan_G': float(self.gan_generator.detach()),
            'L_gan_D': float(self.gan_discriminator.detach()),
        }


# ========================================
# VARIANCE LOSS
# ========================================
def median(p: torch.Tensor) -> torch.Tensor:
    """Médiane ; longueur paire -> moyenne des deux statistiques d'ordre centrales"""
    ordered = torch.sort(p).values
    n = ordered.shape[0]
    if n % 2 == 1:
        return ordered[n // 2]
    return 0.5 * (ordered[n // 2 - 1] + ordered[n // 2])


def median_deviation_variance(p: torch.Tensor) -> torch.Tensor:
    """
    (1/T) * sum_t |p_t - med(p)|^2

    Args:
        p: Scores [T_s]

    Returns:
        Scalaire

    Raises:
        ShapeError: Si p est vide
    """
    if p.ndim != 1 or p.shape[0] == 0:
        raise ShapeError(f"vecteur de scores non vide attendu, reçu {tuple(p.shape)}")
    return torch.mean((p - median(p)) ** 2)


def score_variance(p: torch.Tensor, mode: str = 'median') -> torch.Tensor:
    """Statistique de dispersion des scores : autour de la médiane ou de la moyenne"""
    if mode == 'median':
        return median_deviation_variance(p)
    if mode == 'mean':
        if p.ndim != 1 or p.shape[0] == 0:
            raise ShapeError(f"vecteur de scores non vide attendu, reçu {tuple(p.shape)}")
        return torch.mean((p - p.mean()) ** 2)
    raise ConfigurationError(f"variance_mode inconnu: {mode}")


def variance_loss(p: torch.Tensor, eps: float = 1e-8, mode: str = 'median') -> torch.Tensor:
    """
    Réciproque de la dispersion des scores : pénalise les distributions plates

    Args:
        p: Scores [T_s]
        eps: Epsilon (> 0)
        mode: 'median' (défaut) ou 'mean'

    Returns:
        1 / (V(p) + eps)
    """
    return 1.0 / (score_variance(p, mode) + eps)


def sparsity_loss(p: torch.Tensor, target: float = 0.3) -> torch.Tensor:
    """|mean(p) - sigma|^2"""
    return (p.mean() - target) ** 2


def weight_features(x: torch.Tensor, p: torch.Tensor) -> torch.Tensor:
    """Ligne t multipliée par p_t"""
    if x.ndim != 2 or p.shape != (x.shape[0],):
        raise ShapeError(f"features {tuple(x.shape)} et scores {tuple(p.shape)} incompatibles")
    return x * p.unsqueeze(-1)


def kl_prior(mu: torch.Tensor, log_variance: torch.Tensor) -> torch.Tensor:
    """KL(N(mu, sigma^2) || N(0, I)) sommée sur le latent, moyennée sur le temps"""
    kl = -0.5 * torch.sum(1.0 + log_variance - mu.pow(2) - log_variance.exp(), dim=-1)
    return kl.mean()


# ========================================
# RÉSEAUX
# ========================================
class VAE(nn.Module):
    """Encodeur LSTM -> (mu, log sigma^2) par frame ; décodeur LSTM -> features reconstruites"""

    def __init__(self, config: VaeGanConfig):
        super().__init__()
        self.config = config
        self.encoder = nn.LSTM(config.feature_dim, config.hidden_dim, batch_first=True)
        self.to_mu = nn.Linear(config.hidden_dim, config.latent_dim)
        self.to_log_variance = nn.Linear(config.hidden_dim, config.latent_dim)
        self.decoder = nn.LSTM(config.latent_dim, config.hidden_dim, batch_first=True)
        self.to_features = nn.Linear(config.hidden_dim, config.feature_dim)

    def encode(self, x: torch.Tensor) -> Tuple[torch.Tensor, torch.Tensor]:
        hidden, _ = self.encoder(x.unsqueeze(0))
        hidden = hidden.squeeze(0)
        return self.to_mu(hidden), self.to_log_variance(hidden)

    def decode(self, latent: torch.Tensor) -> torch.Tensor:
        hidden, _ = self.decoder(latent.unsqueeze(0))
        return self.to_features(hidden.squeeze(0))

    def forward(self,
                x: torch.Tensor,
                noise: Optional[torch.Tensor] = None,
                generator: Optional[torch.Generator] = None) -> Tuple[torch.Tensor, torch.Tensor, torch.Tensor]:
        """
        Args:
            x: Features pondérées [T_s x D]
            noise: eta [T_s x latent] ; tiré de N(0, 1) via `generator` si None
        Return:
            (reconstruction [T_s x D], mu [T_s x latent], log sigma^2 [T_s x latent])
        """
        mu, log_variance = self.encode(x)
        if not (torch.isfinite(mu).all() and torch.isfinite(log_variance).all()):
            raise NumericError("statistiques latentes non finies")
        if noise is None:
            noise = torch.randn(mu.shape, generator=generator, dtype=mu.dtype, device=mu.device)
        elif noise.shape != mu.shape:
            raise ShapeError(f"bruit {tuple(noise.shape)} attendu {tuple(mu.shape)}")
        latent = mu + torch.exp(0.5 * log_variance) * noise
        return self.decode(latent), mu, log_variance


class Discriminator(nn.Module):
    """LSTM -> logit réel/faux + dernier état caché (feature matching)"""

    def __init__(self, config: VaeGanConfig):
        super().__init__()
        self.config = config
        self.lstm = nn.LSTM(config.feature_dim, config.discriminator_dim, batch_first=True)
        self.head = nn.Linear(config.discriminator_dim, 1)

    def forward(self, x: torch.Tensor) -> Tuple[torch.Tensor, torch.Tensor]:
        if x.ndim != 2 or x.shape[1] != self.config.feature_dim:
            raise ShapeError(f"features [T_s x {self.config.feature_dim}] attendues, reçu {tuple(x.shape)}")
        _, (h_n, _) = self.lstm(x.unsqueeze(0))
        h_last = h_n[-1, 0]
        return self.head(h_last).squeeze(-1), h_last


class VaeGan(nn.Module):
    """Conteneur VAE + discriminateur"""

    def __init__(self, config: VaeGanConfig):
        super().__init__()
        self.config = config
        self.vae = VAE(config)
        self.discriminator = Discriminator(config)
        logger.debug(f"VaeGan initialisé (D={config.feature_dim}, latent={config.latent_dim})")


def vae_forward(x_weighted: torch.Tensor, model: VaeGan, noise: Optional[torch.Tensor] = None,
                generator: Optional[torch.Generator] = None):
    """Reconstruction reparamétrée : (x_hat, mu, log sigma^2)"""
    return model.vae(x_weighted, noise=noise, generator=generator)


def discriminate(x: torch.Tensor, model: VaeGan) -> Tuple[torch.Tensor, torch.Tensor]:
    """(logit, h_last) du discriminateur"""
    return model.discriminator(x)


# ========================================
# OBJECTIFS
# ========================================
def _bce(logit: torch.Tensor, real: bool) -> torch.Tensor:
    target = torch.ones_like(logit) if real else torch.zeros_like(logit)
    return F.binary_cross_entropy_with_logits(logit, target)


def reconstruction_loss(x: torch.Tensor, x_hat: torch.Tensor, model: VaeGan, mode: str = 'feature') -> torch.Tensor:
    """||h_last(x) - h_last(x_hat)||^2 / largeur (feature) ou MSE brute"""
    if x.shape != x_hat.shape:
        raise ShapeError(f"x {tuple(x.shape)} et x_hat {tuple(x_hat.shape)} incompatibles")
    if mode == 'feature':
        _, h_real = model.discriminator(x)
        _, h_fake = model.discriminator(x_hat)
        return torch.sum((h_real - h_fake) ** 2) / h_real.shape[0]
    if mode == 'mse':
        return F.mse_loss(x_hat, x)
    raise ConfigurationError(f"recon_mode inconnu: {mode}")


def discriminator_loss(x: torch.Tensor, x_hat: torch.Tensor, x_hat_uniform: torch.Tensor,
                       model: VaeGan) -> torch.Tensor:
    """BCE(x -> réel) + BCE(x_hat -> faux) + BCE(x_hat_uniform -> faux)"""
    real_logit, _ = model.discriminator(x)
    fake_logit, _ = model.discriminator(x_hat)
    uniform_logit, _ = model.discriminator(x_hat_uniform)
    return _bce(real_logit, True) + _bce(fake_logit, False) + _bce(uniform_logit, False)


def generator_gan_loss(x_hat: torch.Tensor, model: VaeGan) -> torch.Tensor:
    """BCE(x_hat -> réel)"""
    fake_logit, _ = model.discriminator(x_hat)
    return _bce(fake_logit, True)


def adversarial_objectives(x: torch.Tensor,
                           x_hat: torch.Tensor,
                           x_hat_uniform: torch.Tensor,
                           mu: torch.Tensor,
                           log_variance: torch.Tensor,
                           model: VaeGan,
                           l_var: torch.Tensor,
                           l_sparsity: torch.Tensor,
                           recon_mode: str = 'feature') -> LossBundle:
    """
    Assemble les six termes de loss

    L_var et L_sparsity sont calculés en amont sur les scores. Les gradients de
    L_gan_D traversent x_hat : l'appelant détache les entrées pour la mise à
    jour du discriminateur.

    Returns:
        LossBundle

    Raises:
        NumericError: Si un terme n'est pas fini
    """
    bundle = LossBundle(
        variance=l_var,
        sparsity=l_sparsity,
        reconstruction=reconstruction_loss(x, x_hat, model, recon_mode),
        prior=kl_prior(mu, log_variance),
        gan_generator=generator_gan_loss(x_hat, model),
        gan_discriminator=discriminator_loss(x, x_hat, x_hat_uniform, model),
    )
    for name, value in bundle.as_floats().items():
        if not math.isfinite(value):
            raise NumericError("terme de loss non fini", {'term': name})
    return bundle


__all__ = [
    'VARIANCE_MODES',
    'RECON_MODES',
    'TrainWeights',
    'VaeGanConfig',
    'LossBundle',
    'median',
    'median_deviation_variance',
    'score_variance',
    'variance_loss',
    'sparsity_loss',
    'weight_features',
    'kl_prior',
    'VAE',
    'Discriminator',
    'VaeGan',
    'vae_forward',
    'discriminate',
    'reconstruction_loss',
    'discriminator_loss',
    'generator_gan_loss',
    'adversarial_objectives',
]
