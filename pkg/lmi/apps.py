from django.apps import AppConfig


class LmiConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'lmi'
    verbose_name = 'Desigualdades matriciales lineales'
