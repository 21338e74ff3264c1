"""
SPNet Segmentation
Ponto de entrada principal do projeto
"""

import sys
from pathlib import Path

# Adiciona a raiz do projeto ao path para permitir imports
project_root = Path(__file__).parent
sys.path.insert(0, str(project_root))

from src.cli.interface import cli_dispatch


def main():
    """Função principal do projeto"""
    sys.exit(cli_dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
