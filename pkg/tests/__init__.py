"""
Módulo tests - Testes automatizados
"""

# Configuração para testes
import os
import sys
import tempfile
from pathlib import Path

# Adiciona a raiz do projeto ao path para testes
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

# Cache de kernels isolado por sessão de testes
os.environ.setdefault("SPNET_CACHE_DIR", tempfile.mkdtemp(prefix="spnet-kernels-"))

__version__ = "1.0.0"
