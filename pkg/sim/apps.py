from django.apps import AppConfig


class SimulationConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'sim'
    verbose_name = 'Simulación del lazo cerrado'
