"""
Módulo utils - Utilitários e funções auxiliares
"""

from .file_handler import FileHandler
from .validators import ConfigValidator, SPNetError
from .formatters import ReportFormatter

__all__ = ["FileHandler", "ConfigValidator", "SPNetError", "ReportFormatter"]
