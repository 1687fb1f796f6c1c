from django.apps import AppConfig


class StandardLdgConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'apps.standard_ldg'
    verbose_name = 'Standard Landau-deGennes'
