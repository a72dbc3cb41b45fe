"""Pytest setup: Django without a database, logfire kept quiet."""

import os

import django
import logfire

os.environ.setdefault("DJANGO_SETTINGS_MODULE", "fine_grained_ood.settings")
django.setup()

logfire.configure(send_to_logfire=False, console=False)
