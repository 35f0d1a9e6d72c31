"""cs-fallwatch: vigilância com compressed sensing e detecção de quedas.

Este pacote fornece funcionalidades para:
- Adquirir frames por projeções aleatórias ortonormais (y = Φx)
- Transmitir medições em pacotes por um canal com perdas
- Reconstruir frames com PnP-ADMM e denoisers plugáveis
- Detectar objetos no domínio das medições e classificar quedas
"""

__version__ = "0.1.0"
