"""
Django settings for the nematic project.

Generated by 'django-admin startproject' using Django 4.2 and trimmed down to
what the solver apps, the run registry and the report exports need.

For more information on this file, see
https://docs.djangoproject.com/en/4.2/topics/settings/
"""

import os
from pathlib import Path

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent


# SECURITY WARNING: keep the secret key used in production secret!
SECRET_KEY = os.environ.get(
    'NEMATIC_SECRET_KEY',
    'django-insecure-n3m4t1c-0f8b2k7q9x1w5v3r6t8y2u4i6o8p0a2s4d6f8g0h2j',
)

# SECURITY WARNING: don't run with debug turned on in production!
DEBUG = os.environ.get('NEMATIC_DEBUG', '1') == '1'

ALLOWED_HOSTS = []


# Application definition

INSTALLED_APPS = [
    'django.contrib.admin',
    'django.contrib.auth',
    'django.contrib.contenttypes',
    'django.contrib.sessions',
    'django.contrib.messages',
    'django.contrib.staticfiles',
    'apps.core',
    'apps.meshes',
    'apps.fem',
    'apps.fields',
    'apps.potentials',
    'apps.energy',
    'apps.couplings',
    'apps.flow',
    'apps.standard_ldg',
    'apps.experiments',
    'apps.reports',
]

MIDDLEWARE = [
    'django.middleware.security.SecurityMiddleware',
    'django.contrib.sessions.middleware.SessionMiddleware',
    'django.middleware.common.CommonMiddleware',
    'django.middleware.csrf.CsrfViewMiddleware',
    'django.contrib.auth.middleware.AuthenticationMiddleware',
    'django.contrib.messages.middleware.MessageMiddleware',
    'django.middleware.clickjacking.XFrameOptionsMiddleware',
]

ROOT_URLCONF = 'config.urls'

# Report exports sit behind the admin login.
LOGIN_URL = 'admin:login'

TEMPLATES = [
    {
        'BACKEND': 'django.template.backends.django.DjangoTemplates',
        'DIRS': [],
        'APP_DIRS': True,
        'OPTIONS': {
            'context_processors': [
                'django.template.context_processors.debug',
                'django.template.context_processors.request',
                'django.contrib.auth.context_processors.auth',
                'django.contrib.messages.context_processors.messages',
            ],
        },
    },
]

WSGI_APPLICATION = 'config.wsgi.application'


# Database
# https://docs.djangoproject.com/en/4.2/ref/settings/#databases

DATABASES = {
    'default': {
        'ENGINE': 'django.db.backends.sqlite3',
        'NAME': BASE_DIR / 'db.sqlite3',
    }
}


# Internationalization
# https://docs.djangoproject.com/en/4.2/topics/i18n/

LANGUAGE_CODE = 'en-us'

TIME_ZONE = 'UTC'

USE_I18N = True

USE_TZ = True


# Static files (CSS, JavaScript, Images)
# https://docs.djangoproject.com/en/4.2/howto/static-files/

STATIC_URL = 'static/'

DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'


# Logging
# https://docs.djangoproject.com/en/4.2/topics/logging/

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'verbose': {
            'format': '{asctime} {levelname} {name}: {message}',
            'style': '{',
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'formatter': 'verbose',
        },
    },
    'loggers': {
        'apps': {
            'handlers': ['console'],
            'level': os.environ.get('NEMATIC_LOG_LEVEL', 'INFO'),
            'propagate': False,
        },
    },
}


# Solver defaults. Experiment configs override the flow-level entries.
NEMATIC = {
    'CG_TOL': 1e-10,
    'CG_MAX_ITER': None,
    'CFL_CONSTANT': 0.5,
    'SIGMA_REG': 1e-10,
    'MONOTONICITY_TOL': 1e-10,
    'LDG_MONOTONICITY_TOL': 1e-8,
    'OUTPUT_ROOT': BASE_DIR / 'runs',
    'NUM_THREADS': int(os.environ.get('NEMATIC_NUM_THREADS', '0')) or None,
}
