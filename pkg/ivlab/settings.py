"""
Django settings for the ivlab project.

The project carries no database, URLs or middleware: it exists to host the
``instrumental`` app and its management commands.
"""

import os
from pathlib import Path

from dotenv import load_dotenv

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent

load_dotenv(BASE_DIR / '.env')

SECRET_KEY = os.environ.get('IVLAB_SECRET_KEY', 'ivlab-local-only')

DEBUG = False

ALLOWED_HOSTS = []


# Application definition

INSTALLED_APPS = [
    'instrumental',
]

DATABASES = {}


# Internationalization

LANGUAGE_CODE = 'en-us'

TIME_ZONE = 'UTC'

USE_I18N = False

USE_TZ = True


# Logging

IVLAB_LOG_LEVEL = os.environ.get('IVLAB_LOG_LEVEL', 'WARNING').upper()

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'standard': {
            'format': '%(asctime)s - %(levelname)s - %(message)s',
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'formatter': 'standard',
        },
    },
    'loggers': {
        'instrumental': {
            'handlers': ['console'],
            'level': IVLAB_LOG_LEVEL,
            'propagate': False,
        },
    },
}


# Instrumental toolkit

INSTRUMENTAL = {
    'FLOAT_TOLERANCE': 1e-9,
    'CERTIFICATE_TOLERANCE': 1e-8,
    'CURVE_GRID': 50,
    'QUANTUM_GRID': 20,
    'QUANTUM_STARTS': 8,
    'NELDER_MEAD_TOLERANCE': 1e-10,
    'DEFAULT_SEED': 0,
    'WORKERS': int(os.environ.get('IVLAB_WORKERS', '1')),
}
