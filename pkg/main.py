#!/usr/bin/env python3
"""
vidsum - Orchestrateur en ligne de commande

Usage:
    python main.py synth  [--config FILE] [--section.key=value ...]
    python main.py train  [...]
    python main.py eval   [...]
    python main.py ablate [...]
    python main.py plot   [...]

Configuration:
    - config/.env : Variables d'environnement (VIDSUM_DATA_ROOT, LOG_LEVEL, ...)
    - config/defaults.yaml : RunConfig par défaut

Architecture:
    VidSumPipeline enchaîne les modules :
    1. dataio : bundles de features (+ générateur synthétique)
    2. trainer : CSNet + VAE-GAN, checkpoints
    3. evaluator : résumés key-shot, F-score, splits, ablation
    4. plotting : barres de scores et attention

Codes de sortie : 0 succès, 1 usage/configuration, 2 données, 3 numérique.
"""

import argparse
import sys
from pathlib import Path
from typing import List, Optional, Sequence

import torch

# Ajouter le répertoire racine au PYTHONPATH
sys.path.insert(0, str(Path(__file__).parent))

# Configuration
from config.settings import DEFAULT_CONFIG_FILE, TORCH_THREADS, validate_settings
from config.run_config import RunConfig, dump_config, load_config

# Modules
from src.modules import (
    Dataset,
    cross_validate,
    generate_synthetic,
    load_checkpoint,
    load_dataset,
    run_ablation,
    train,
    write_ablation,
    write_dataset,
    write_plots,
    write_report,
)

# Logging + erreurs
from src.utils.errors import ConfigurationError, VidSumError
from src.utils.logger import log_section, setup_logger

logger = setup_logger(__name__)

COMMANDS = ('synth', 'train', 'eval', 'ablate', 'plot')
RUN_CONFIG_FILE = 'run_config.yaml'


class VidSumPipeline:
    """
    Orchestrateur des commandes.
    Chaque commande lit le RunConfig résolu et écrit ses artefacts avec une copie du config.
    """

    def __init__(self, config: RunConfig):
        """Valide l'environnement et fige le nombre de threads torch"""
        validate_settings()
        torch.set_num_threads(TORCH_THREADS)
        self.config = config
        self.config_record = config.to_dict()

    def _load_target(self) -> Dataset:
        path = self.config.data.bundle_path
        logger.info(f"📂 Chargement du bundle: {path}")
        dataset = load_dataset(path)
        logger.info(f"✅ {len(dataset)} vidéos ({dataset.kind.value}, D={dataset.videos[0].feature_dim})")
        return dataset

    def _train_config(self, dataset: Dataset):
        return self.config.train.for_feature_dim(dataset.videos[0].feature_dim)

    def synth(self) -> int:
        """Génère un bundle synthétique"""
        dataset = generate_synthetic(self.config.synth)
        dataset.metadata['run_config'] = self.config_record
        path = write_dataset(dataset, self.config.data.bundle_path)
        logger.info(f"✅ Bundle synthétique écrit: {path} ({len(dataset)} vidéos)")
        return 0

    def train(self) -> int:
        """Entraîne sur tout le bundle et écrit le checkpoint"""
        dataset = self._load_target()
        output = self.config.data.output_path
        checkpoint, history = train(
            dataset.videos,
            self._train_config(dataset),
            self.config.data.checkpoint_path,
            metadata={'dataset': dataset.name, 'run_config': self.config_record},
        )
        dump_config(self.config, output / RUN_CONFIG_FILE)
        logger.info(f"✅ Entraînement terminé: var(p) finale = {history.score_variances[-1]:.5f}")
        return 0

    def eval(self) -> int:
        """Évalue selon le setting configuré, avec ou sans checkpoint"""
        dataset = self._load_target()
        auxiliary = [load_dataset(path) for path in self.config.eval.auxiliary]
        checkpoint = load_checkpoint(self.config.eval.checkpoint) if self.config.eval.checkpoint else None

        eval_report, _ = cross_validate(dataset, self._train_config(dataset), self.config.eval,
                                        self.config.summary, self.config.segment, auxiliary, checkpoint)
        output = self.config.data.output_path / 'eval'
        write_report(eval_report, output, self.config_record)
        dump_config(self.config, output / RUN_CONFIG_FILE)

        log_section(logger, "📊 RÉSULTATS")
        for index, value in enumerate(eval_report.split_fscores):
            logger.info(f"split {index}: F = {value:.2f}%")
        logger.info(f"🎯 F final = {eval_report.final_fscore:.2f}%")
        return 0

    def ablate(self) -> int:
        """Tableau Exp.1 à Exp.8"""
        dataset = self._load_target()
        auxiliary = [load_dataset(path) for path in self.config.eval.auxiliary]
        rows = run_ablation(dataset, self._train_config(dataset), self.config.ablate.seeds,
                            self.config.eval, self.config.summary, self.config.segment, auxiliary,
                            experiments=self.config.ablate.experiments)
        output = self.config.data.output_path / 'ablation'
        write_ablation(rows, output, self.config_record)
        dump_config(self.config, output / RUN_CONFIG_FILE)
        return 0

    def plot(self) -> int:
        """Graphiques des scores d'un checkpoint"""
        checkpoint_path = self.config.plot.checkpoint or self.config.data.checkpoint_path
        checkpoint = load_checkpoint(checkpoint_path)
        dataset = self._load_target()
        output = self.config.data.output_path / 'plots'
        write_plots(checkpoint.scorer, dataset.videos, output, self.config.plot,
                    self.config.summary, self.config.segment, self.config_record)
        dump_config(self.config, output / RUN_CONFIG_FILE)
        return 0

    def run(self, command: str) -> int:
        """
        Exécute une commande.

        Returns:
            Code de sortie
        """
        if command not in COMMANDS:
            raise ConfigurationError(f"commande inconnue: {command}")
        log_section(logger, f"🚀 VIDSUM {command.upper()}")
        return getattr(self, command)()


class _ArgumentParser(argparse.ArgumentParser):
    """argparse sortirait en code 2 (réservé aux erreurs de données)"""

    def error(self, message):
        raise ConfigurationError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _ArgumentParser(prog='vidsum', description="Résumé vidéo non supervisé par key-shots")
    parser.add_argument('command', choices=COMMANDS, help="commande à exécuter")
    parser.add_argument('--config', default=None,
                        help=f"fichier YAML (défaut {DEFAULT_CONFIG_FILE.name} s'il existe)")
    return parser


def parse_args(argv: Sequence[str]):
    """
    Sépare la commande, --config et les surcharges --section.key=value

    Returns:
        (namespace, liste de surcharges)
    """
    args, extra = build_parser().parse_known_args(argv)
    overrides: List[str] = []
    for item in extra:
        if not item.startswith('--') or '=' not in item:
            raise ConfigurationError(f"argument non reconnu: {item}")
        overrides.append(item[2:])
    return args, overrides


def run_cli(argv: Optional[Sequence[str]] = None) -> int:
    """Point d'entrée testable : retourne le code de sortie"""
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args, overrides = parse_args(argv)
        config_file = args.config
        if config_file is None and DEFAULT_CONFIG_FILE.exists():
            config_file = DEFAULT_CONFIG_FILE
        config = load_config(config_file, overrides)
        return VidSumPipeline(config).run(args.command)
    except KeyboardInterrupt:
        logger.warning("\n⚠️ Arrêt demandé par l'utilisateur")
        return 130
    except VidSumError as e:
        logger.error(f"❌ {e}")
        return e.exit_code
    except ValueError as e:
        logger.error(f"❌ Configuration invalide: {e}")
        return 1
    except Exception as e:
        logger.error(f"❌ Erreur fatale: {e}")
        import traceback
        logger.error(traceback.format_exc())
        return 1


def main():
    """Point d'entrée principal"""
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
