"""Configure Django so pytest can collect the ``regularity`` test suite."""
import os

import django

os.environ.setdefault("DJANGO_SETTINGS_MODULE", "holderlab.settings")
django.setup()
