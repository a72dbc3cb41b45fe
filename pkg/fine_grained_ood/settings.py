"""Django settings for the fine_grained_ood toolkit.

Django is used for its management-command framework, app registry and test case
classes; there is no database, no URL routing and no templates.
"""

from pathlib import Path

from .config import configure_logfire
from .config import settings as env_settings

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent

# Logfire Configuration
# https://logfire.pydantic.dev/docs/
configure_logfire()

SECRET_KEY = env_settings.SECRET_KEY
LOGFIRE_TOKEN = env_settings.LOGFIRE_TOKEN

DEBUG = env_settings.DEBUG

ALLOWED_HOSTS: list[str] = []

# Application definition

LOCAL_APPS = [
    "apps.hierarchy",
    "apps.detectors",
    "apps.mixing",
    "apps.losses",
    "apps.metrics",
    "apps.trainer",
    "apps.cli",
]

INSTALLED_APPS = LOCAL_APPS

# No database: every artifact is a file
DATABASES: dict = {}

USE_TZ = True
TIME_ZONE = "UTC"

# Bundled run configurations and hierarchy specs
CONFIGS_DIR = BASE_DIR / "configs"
OUTPUT_DIR = env_settings.output_dir
MAX_WORKERS = env_settings.MAX_WORKERS

# Logging Configuration
# https://docs.djangoproject.com/en/5.2/topics/logging/

LOGGING = {
    "version": 1,
    "disable_existing_loggers": False,
    "formatters": {
        "verbose": {
            "format": "{levelname} {asctime} {module} {message}",
            "style": "{",
        },
    },
    "handlers": {
        "console": {
            "class": "logging.StreamHandler",
            "formatter": "verbose",
        },
        "logfire": {
            "class": "logfire.LogfireLoggingHandler",
        },
    },
    "loggers": {
        "apps": {
            "handlers": ["console", "logfire"],
            "level": "INFO",
            "propagate": False,
        },
        "django": {
            "handlers": ["logfire"],
            "level": "WARNING",
            "propagate": False,
        },
    },
}
