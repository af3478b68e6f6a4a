"""
Configuration d'exécution (RunConfig)

Un document YAML à sections (data, synth, csnet, vaegan, weights, train,
segment, summary, eval, ablate, plot) + surcharges `section.key=value`.
Les clés inconnues sont rejetées ; le RunConfig résolu est recopié dans
chaque artefact produit.
"""

from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union, get_args, get_origin, get_type_hints

import yaml

from config.settings import DATA_ROOT
from src.modules.adversarial import TrainWeights, VaeGanConfig
from src.modules.csnet import CSNetConfig
from src.modules.dataio import SyntheticSpec
from src.modules.evaluator import EvalConfig
from src.modules.plotting import PlotConfig
from src.modules.segment import SegmentConfig
from src.modules.summarize import SummaryConfig
from src.modules.trainer import ABLATION_FLAGS, TrainConfig
from src.utils.errors import ConfigurationError


# Sections imbriquées dans TrainConfig mais exposées au premier niveau du document
_TRAIN_NESTED = ('csnet', 'vaegan', 'weights')


@dataclass
class DataConfig:
    """Chemins : bundle cible et répertoire de sorties"""
    bundle: Optional[str] = None        # défaut <DATA_ROOT>/synthetic
    output_dir: Optional[str] = None    # défaut <DATA_ROOT>/runs

    @property
    def bundle_path(self) -> Path:
        return Path(self.bundle) if self.bundle else DATA_ROOT / 'synthetic'

    @property
    def output_path(self) -> Path:
        return Path(self.output_dir) if self.output_dir else DATA_ROOT / 'runs'

    @property
    def checkpoint_path(self) -> Path:
        return self.output_path / 'checkpoint'


@dataclass
class AblateConfig:
    """Seeds et expériences du tableau d'ablation"""
    seeds: List[int] = field(default_factory=lambda: [0])
    experiments: Optional[List[str]] = None     # None = Exp.1 à Exp.8

    def __post_init__(self):
        errors = []
        if not self.seeds:
            errors.append("ablate.seeds ne peut pas être vide")
        self.seeds = [int(s) for s in self.seeds]
        if self.experiments is not None:
            self.experiments = [str(label) for label in self.experiments]
            known = {f"Exp.{index}" for index in range(1, len(ABLATION_FLAGS) + 1)}
            unknown = sorted(set(self.experiments) - known)
            if unknown or not self.experiments:
                errors.append(f"ablate.experiments inconnues ou vides: {unknown}")
        if errors:
            raise ConfigurationError("\n".join(errors))


@dataclass
class RunConfig:
    """Configuration résolue d'une commande"""
    data: DataConfig = field(default_factory=DataConfig)
    synth: SyntheticSpec = field(default_factory=SyntheticSpec)
    train: TrainConfig = field(default_factory=TrainConfig)
    segment: SegmentConfig = field(default_factory=SegmentConfig)
    summary: SummaryConfig = field(default_factory=SummaryConfig)
    eval: EvalConfig = field(default_factory=EvalConfig)
    ablate: AblateConfig = field(default_factory=AblateConfig)
    plot: PlotConfig = field(default_factory=PlotConfig)

    def to_dict(self) -> Dict[str, Any]:
        """Forme document : csnet, vaegan et weights au premier niveau"""
        train = self.train.to_dict()
        document = {name: train.pop(name) for name in _TRAIN_NESTED}
        document['train'] = train
        for f in fields(self):
            if f.name != 'train':
                document[f.name] = asdict(getattr(self, f.name))
        return document

    @classmethod
    def from_dict(cls, document: Dict[str, Any]) -> 'RunConfig':
        """Construit et valide ; lève ConfigurationError sur clé inconnue ou valeur invalide"""
        if document is None:
            document = {}
        if not isinstance(document, dict):
            raise ConfigurationError("le document de configuration doit être un mapping de sections")

        known = {f.name for f in fields(cls)} | set(_TRAIN_NESTED)
        unknown = sorted(set(document) - known)
        if unknown:
            raise ConfigurationError(f"clé de configuration inconnue: {', '.join(unknown)}")

        nested = {name: _build_section(section_type, name, document.get(name))
                  for name, section_type in (('csnet', CSNetConfig), ('vaegan', VaeGanConfig),
                                             ('weights', TrainWeights))}
        train_values = _section_values(TrainConfig, 'train', document.get('train'), exclude=_TRAIN_NESTED)
        try:
            train = TrainConfig(**train_values, **nested)
        except TypeError as e:
            raise ConfigurationError(f"section train invalide: {e}") from e

        sections = {f.name: _build_section(f.default_factory, f.name, document.get(f.name))
                    for f in fields(cls) if f.name != 'train'}
        return cls(train=train, **sections)


def _unwrap_optional(annotation: Any) -> Any:
    if get_origin(annotation) is Union:
        args = [a for a in get_args(annotation) if a is not type(None)]
        if len(args) == 1:
            return args[0]
    return annotation


def _coerce(value: Any, annotation: Any, key: str) -> Any:
    """Aligne une valeur YAML sur le type du champ (ex. '2e-4' -> float)"""
    if value is None:
        return None
    target = _unwrap_optional(annotation)
    try:
        if target is float and not isinstance(value, bool):
            return float(value)
        if target is int and isinstance(value, str):
            return int(value)
        if target is bool and not isinstance(value, bool):
            raise ValueError(f"booléen attendu, reçu {value!r}")
        if get_origin(target) in (tuple, Tuple) and isinstance(value, (list, tuple)):
            return tuple(value)
    except ValueError as e:
        raise ConfigurationError(f"valeur invalide pour {key}: {value!r} ({e})") from e
    return value


def _section_values(section_type: type, name: str, values: Optional[Dict[str, Any]],
                    exclude: Sequence[str] = ()) -> Dict[str, Any]:
    if values is None:
        return {}
    if not isinstance(values, dict):
        raise ConfigurationError(f"la section {name} doit être un mapping")
    hints = get_type_hints(section_type)
    allowed = {f.name for f in fields(section_type) if f.init} - set(exclude)
    unknown = sorted(set(values) - allowed)
    if unknown:
        raise ConfigurationError(f"clé de configuration inconnue: {', '.join(f'{name}.{k}' for k in unknown)}")
    return {key: _coerce(value, hints[key], f"{name}.{key}") for key, value in values.items()}


def _build_section(section_type: type, name: str, values: Optional[Dict[str, Any]]):
    try:
        return section_type(**_section_values(section_type, name, values))
    except TypeError as e:
        raise ConfigurationError(f"section {name} invalide: {e}") from e


def apply_override(document: Dict[str, Any], override: str) -> None:
    """
    Applique une surcharge `section.key=value` au document

    La valeur est interprétée en YAML (nombres, booléens, listes).
    """
    override = override[2:] if override.startswith('--') else override
    if '=' not in override:
        raise ConfigurationError(f"surcharge invalide (attendu section.key=value): {override}")
    address, raw = override.split('=', 1)
    parts = address.split('.')
    if len(parts) != 2 or not all(parts):
        raise ConfigurationError(f"surcharge invalide (attendu section.key=value): {override}")
    section, key = parts
    try:
        value = yaml.safe_load(raw) if raw else None
    except yaml.YAMLError as e:
        raise ConfigurationError(f"valeur illisible pour {address}: {raw}") from e
    current = document.setdefault(section, {})
    if not isinstance(current, dict):
        raise ConfigurationError(f"la section {section} doit être un mapping")
    current[key] = value


def load_config(path: Optional[Union[str, Path]] = None, overrides: Sequence[str] = ()) -> RunConfig:
    """
    Charge un RunConfig depuis un fichier YAML et des surcharges

    Args:
        path: Fichier YAML (None = valeurs par défaut seules)
        overrides: Surcharges `section.key=value` ; elles priment sur le fichier

    Returns:
        RunConfig validé

    Raises:
        ConfigurationError: Fichier absent ou illisible, clé inconnue, valeur invalide
    """
    document: Dict[str, Any] = {}
    if path is not None:
        path = Path(path)
        if not path.exists():
            raise ConfigurationError(f"fichier de configuration introuvable: {path}")
        try:
            with open(path, 'r', encoding='utf-8') as f:
                document = yaml.safe_load(f) or {}
        except yaml.YAMLError as e:
            raise ConfigurationError(f"YAML invalide dans {path}: {e}") from e
        if not isinstance(document, dict):
            raise ConfigurationError(f"{path}: le document doit être un mapping de sections")

    for override in overrides:
        apply_override(document, override)
    return RunConfig.from_dict(document)


def dump_config(config: RunConfig, path: Union[str, Path]) -> Path:
    """Écrit le RunConfig résolu en YAML"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w', encoding='utf-8') as f:
        yaml.safe_dump(config.to_dict(), f, sort_keys=True)
    return path


__all__ = [
    'DataConfig',
    'AblateConfig',
    'RunConfig',
    'apply_override',
    'load_config',
    'dump_config',
]
