from django.apps import AppConfig


class MixingConfig(AppConfig):
    name = 'apps.mixing'
