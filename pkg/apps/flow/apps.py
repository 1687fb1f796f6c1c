from django.apps import AppConfig


class GradientFlowConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'apps.flow'
    verbose_name = 'Gradient flows'
