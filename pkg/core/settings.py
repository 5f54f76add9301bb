from pathlib import Path
import os
from dotenv import load_dotenv

load_dotenv()

BASE_DIR = Path(__file__).resolve().parent.parent

SECRET_KEY = os.getenv('SECRET_KEY', 'conformity-lab-insecure-local-key')

DEBUG = os.getenv('DEBUG', 'False') == 'True'


INSTALLED_APPS = [
    'rest_framework',
    'debates',
    'analysis',
]


# Internationalization
# https://docs.djangoproject.com/en/6.0/topics/i18n/

TIME_ZONE = os.getenv('TIME_ZONE', 'UTC')

USE_TZ = True


# Logging
# https://docs.djangoproject.com/en/6.0/topics/logging/

LOG_LEVEL = os.getenv('LOG_LEVEL', 'INFO')

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'plain': {
            'format': '%(asctime)s %(levelname)s %(name)s: %(message)s',
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'formatter': 'plain',
        },
    },
    'loggers': {
        'debates': {'handlers': ['console'], 'level': LOG_LEVEL, 'propagate': False},
        'analysis': {'handlers': ['console'], 'level': LOG_LEVEL, 'propagate': False},
    },
}


# Conformity experiments

CONFORMITY_DEFAULT_ALPHA = float(os.getenv('CONFORMITY_DEFAULT_ALPHA', '0.01'))

CONFORMITY_OUTPUT_DIR = Path(os.getenv('CONFORMITY_OUTPUT_DIR', str(BASE_DIR / 'runs')))

CONFORMITY_BACKEND_MAX_RETRIES = int(os.getenv('CONFORMITY_BACKEND_MAX_RETRIES', '5'))

CONFORMITY_BACKEND_TIMEOUT = float(os.getenv('CONFORMITY_BACKEND_TIMEOUT', '120'))

CONFORMITY_BACKEND_MAX_CONCURRENCY = int(os.getenv('CONFORMITY_BACKEND_MAX_CONCURRENCY', '8'))

CONFORMITY_BACKEND_REQUESTS_PER_MINUTE = (
    float(os.getenv('CONFORMITY_BACKEND_REQUESTS_PER_MINUTE'))
    if os.getenv('CONFORMITY_BACKEND_REQUESTS_PER_MINUTE') else None
)

# Raw provider requests/responses are mirrored here when set
CONFORMITY_AUDIT_LOG = os.getenv('CONFORMITY_AUDIT_LOG') or None
