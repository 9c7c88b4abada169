import os

import django

os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'ivlab.settings')
django.setup()
