import os

import django

os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'heatctl.settings')
django.setup()
