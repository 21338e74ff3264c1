"""
Módulo cli - Interface de linha de comando
"""

from .interface import main

__all__ = ["main"]
