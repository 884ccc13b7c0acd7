"""
es-unicycle CLI Module

Command-line interface for es-unicycle.
"""

from es_unicycle.cli.es_cli import cli

__all__ = ["cli"]
