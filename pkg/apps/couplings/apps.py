from django.apps import AppConfig


class CouplingsConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'apps.couplings'
    verbose_name = 'Colloids and electric fields'
