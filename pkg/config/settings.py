"""
Configuration centralisée pour vidsum
Charge les variables d'environnement et expose les settings
"""

import os
from pathlib import Path
from dotenv import load_dotenv

# Déterminer le chemin racine du projet
BASE_DIR = Path(__file__).resolve().parent.parent

# Charger les variables d'environnement
env_path = BASE_DIR / 'config' / '.env'
if not env_path.exists():
    env_path = BASE_DIR / '.env'

load_dotenv(dotenv_path=env_path)

# ========================================
# APPLICATION SETTINGS
# ========================================
LOG_LEVEL = os.getenv('LOG_LEVEL', 'INFO')

# Nombre de threads torch (1 = traces de loss reproductibles au bit près)
TORCH_THREADS = int(os.getenv('VIDSUM_TORCH_THREADS', '1'))

# ========================================
# PATHS
# ========================================
CONFIG_DIR = BASE_DIR / 'config'
DATA_ROOT = Path(os.getenv('VIDSUM_DATA_ROOT', str(BASE_DIR / 'data')))
LOGS_DIR = Path(os.getenv('VIDSUM_LOGS_DIR', str(DATA_ROOT / 'logs')))
DEFAULT_CONFIG_FILE = CONFIG_DIR / 'defaults.yaml'

# Créer les dossiers s'ils n'existent pas
LOGS_DIR.mkdir(parents=True, exist_ok=True)


# ========================================
# VALIDATION
# ========================================
def validate_settings():
    """Valide que les settings d'environnement sont cohérents"""
    errors = []

    if LOG_LEVEL.upper() not in ('DEBUG', 'INFO', 'WARNING', 'ERROR', 'CRITICAL'):
        errors.append(f"LOG_LEVEL inconnu: {LOG_LEVEL}")

    if TORCH_THREADS < 1:
        errors.append("VIDSUM_TORCH_THREADS doit être >= 1")

    if not DEFAULT_CONFIG_FILE.exists():
        errors.append(f"Fichier de configuration par défaut absent: {DEFAULT_CONFIG_FILE}")

    if errors:
        error_msg = "\n".join([f"  - {error}" for error in errors])
        raise ValueError(f"Configuration invalide :\n{error_msg}")

    return True


# ========================================
# EXPORT
# ========================================
__all__ = [
    'LOG_LEVEL',
    'TORCH_THREADS',
    'BASE_DIR',
    'CONFIG_DIR',
    'DATA_ROOT',
    'LOGS_DIR',
    'DEFAULT_CONFIG_FILE',
    'validate_settings',
]
