"""Allow `python -m calr ...` to reach the CLI."""

from .cli import entrypoint

entrypoint()
