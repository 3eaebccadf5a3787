"""WSGI entrypoint for production servers (Gunicorn)."""

from app_factory import app_from_environment, configure_logging

configure_logging()
app = app_from_environment()
