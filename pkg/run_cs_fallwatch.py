"""cs-fallwatch: pipeline de vigilância com compressed sensing.

Funcionalidades:
- Aquisição comprimida e empacotamento de frames
- Canal com apagamento de pacotes
- Reconstrução PnP-ADMM e classificação queda / não-queda

Comece por ``pipeline --input <dir>`` com uma sequência sintética.
"""

import sys
from pathlib import Path

# Adicionar src/ ao path para importar o módulo
src_path = Path(__file__).parent / "src"
sys.path.insert(0, str(src_path))

from cs_fallwatch.cli import main_sync

if __name__ == "__main__":
    main_sync()
