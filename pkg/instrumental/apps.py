from django.apps import AppConfig


class InstrumentalConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'instrumental'
    verbose_name = 'Instrumental dependence toolkit'
