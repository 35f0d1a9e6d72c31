"""Entry point para execução como módulo Python.

Usage:
    python -m cs_fallwatch --help
    python -m cs_fallwatch pipeline --input frames/ --sub-rate 0.5
"""

from .cli import main_sync

if __name__ == "__main__":
    main_sync()
