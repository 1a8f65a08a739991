"""
Django settings for the holderlab project.

The project hosts the ``regularity`` app: the numerical laboratory, its
``lab`` management command and a read-only API over persisted reports.
"""

import os
from pathlib import Path

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent

# SECURITY WARNING: keep the secret key used in production secret!
SECRET_KEY = os.environ.get(
    "HOLDERLAB_SECRET_KEY", "django-insecure-holderlab-local-report-browser"
)

# SECURITY WARNING: don't run with debug turned on in production!
DEBUG = True

ALLOWED_HOSTS = ["localhost", "127.0.0.1", "testserver"]

# Application definition

INSTALLED_APPS = [
    "django.contrib.contenttypes",
    "django.contrib.auth",
    "rest_framework",
    "corsheaders",
    "regularity",
]

MIDDLEWARE = [
    "corsheaders.middleware.CorsMiddleware",
    "django.middleware.security.SecurityMiddleware",
    "django.middleware.common.CommonMiddleware",
]

ROOT_URLCONF = "holderlab.urls"

WSGI_APPLICATION = "holderlab.wsgi.application"

# Reports live on disk; nothing is stored in a database.
DATABASES = {}

# Internationalization

LANGUAGE_CODE = "en-us"

TIME_ZONE = "UTC"

USE_I18N = False

USE_TZ = True

DEFAULT_AUTO_FIELD = "django.db.models.BigAutoField"

CORS_ALLOW_ALL_ORIGINS = True

CORS_ALLOW_METHODS = ["GET", "OPTIONS"]

REST_FRAMEWORK = {
    "DEFAULT_AUTHENTICATION_CLASSES": [],
    "DEFAULT_PERMISSION_CLASSES": [
        "rest_framework.permissions.AllowAny",
    ],
    "DEFAULT_RENDERER_CLASSES": [
        "rest_framework.renderers.JSONRenderer",
    ],
    "UNAUTHENTICATED_USER": None,
}

HOLDERLAB = {
    "REPORTS_ROOT": BASE_DIR / "reports",
    "CONFIGS_DIR": BASE_DIR / "regularity" / "configs",
    "DEFAULT_JOBS": os.cpu_count() or 1,
    "OUTPUT_ENV_VAR": "HOLDERLAB_OUT",
    "SCHEMA_VERSION": "1.0",
    "VERSION": "1.0.0",
}

LOGGING = {
    "version": 1,
    "disable_existing_loggers": False,
    "formatters": {
        "verbose": {
            "format": "%(asctime)s %(levelname)s %(name)s %(message)s",
        },
    },
    "handlers": {
        "console": {
            "class": "logging.StreamHandler",
            "formatter": "verbose",
        },
    },
    "loggers": {
        "regularity": {
            "handlers": ["console"],
            "level": "INFO",
            "propagate": False,
        },
    },
}
