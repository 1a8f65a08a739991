"""
WSGI entry point serving the read-only report API of holderlab.

Point a WSGI server at ``holderlab.wsgi:application``; experiments themselves
only run through ``manage.py lab run``.
"""

import os

from django.core.wsgi import get_wsgi_application

os.environ.setdefault("DJANGO_SETTINGS_MODULE", "holderlab.settings")

application = get_wsgi_application()
