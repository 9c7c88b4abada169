#!/usr/bin/env python
"""Command-line entry point for the instrumental dependence toolkit."""
import os
import sys


def run(argv):
    """Runs one subcommand, e.g. ``run(['manage.py', 'eval', '--input', 'd.json', '--ineq', 'pearl-00'])``.

    Returns the process exit status: 0 on success, 1 on a domain error, 2 on a usage error.
    """
    os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'ivlab.settings')
    try:
        from django.core.management import execute_from_command_line
    except ImportError as exc:
        raise ImportError(
            "Couldn't import Django. Are you sure it's installed and "
            "available on your PYTHONPATH environment variable? Did you "
            "forget to activate a virtual environment?"
        ) from exc
    try:
        execute_from_command_line(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 1
    return 0


def main():
    sys.exit(run(sys.argv))


if __name__ == '__main__':
    main()
