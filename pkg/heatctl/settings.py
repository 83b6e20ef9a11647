"""
Django settings for heatctl project.

Toolkit de síntesis, verificación LMI y simulación de controladores
basados en observador para la ecuación del calor semilineal.

For the full list of settings and their values, see
https://docs.djangoproject.com/en/4.2/ref/settings/
"""

# heatctl/settings.py

import os
from pathlib import Path
from dotenv import load_dotenv

load_dotenv()

BASE_DIR = Path(__file__).resolve().parent.parent

# Clave secreta y modo debug
SECRET_KEY = os.getenv("SECRET_KEY", "clave-secreta-por-defecto")
DEBUG = os.getenv("DEBUG", "False") == "True"

ALLOWED_HOSTS = []

INSTALLED_APPS = [
    # Terceros
    'rest_framework',

    # Propias
    'spectral',
    'synthesis',
    'lmi',
    'sim',
    'experiments',
]

# No se persiste nada: los resultados salen como CSV
DATABASES = {}

# Localización
LANGUAGE_CODE = 'es-es'
TIME_ZONE = 'America/Bogota'
USE_I18N = True
USE_TZ = True

DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'

# Logging
LOG_LEVEL = os.getenv("LOG_LEVEL", "INFO")

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'simple': {
            'format': '{asctime} {levelname} {name}: {message}',
            'style': '{',
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'formatter': 'simple',
        },
    },
    'loggers': {
        app: {'handlers': ['console'], 'level': LOG_LEVEL, 'propagate': False}
        for app in ('spectral', 'synthesis', 'lmi', 'sim', 'experiments')
    },
}

# Espectral
SPECTRAL_GRID_INTERVALS = int(os.getenv("SPECTRAL_GRID_INTERVALS", "200"))

# LMI
LMI_MARGIN_TOL = float(os.getenv("LMI_MARGIN_TOL", "1e-9"))
LMI_BISECTION_TOL = float(os.getenv("LMI_BISECTION_TOL", "0.01"))
LMI_GAMMA_GRID = os.getenv("LMI_GAMMA_GRID", "0.1:100:16")
LMI_TRUST_RADIUS = float(os.getenv("LMI_TRUST_RADIUS", "1e4"))
LMI_MAX_NEWTON_STEPS = int(os.getenv("LMI_MAX_NEWTON_STEPS", "600"))

# Simulación
SIM_CFL_FACTOR = float(os.getenv("SIM_CFL_FACTOR", "0.4"))
SIM_BLOWUP_THRESHOLD = float(os.getenv("SIM_BLOWUP_THRESHOLD", "1e12"))
SIM_T_FINAL = float(os.getenv("SIM_T_FINAL", "20"))

# Experimentos
EXPERIMENTS_OUTPUT_DIR = Path(os.getenv("EXPERIMENTS_OUTPUT_DIR", BASE_DIR / 'out'))
EXPERIMENTS_JOBS = int(os.getenv("EXPERIMENTS_JOBS", "1"))
