"""Hierarquia de exceções do cs-fallwatch.

Cada erro carrega um ``code`` estável, usado pela CLI para emitir uma única
linha de erro legível por máquina.
"""


class FallwatchError(Exception):
    """Raiz de todos os erros do pacote."""

    code = "fallwatch.error"


# =============================================================================
# Frames
# =============================================================================


class FrameError(FallwatchError):
    code = "frame.error"


class PGMError(FrameError):
    code = "pgm.error"


class MissingFileError(PGMError, FileNotFoundError):
    code = "pgm.missing_file"


class BadMagicError(PGMError, ValueError):
    code = "pgm.bad_magic"


class BadMaxvalError(PGMError, ValueError):
    code = "pgm.bad_maxval"


class TruncatedPayloadError(PGMError, ValueError):
    code = "pgm.truncated"


class UnwritablePathError(PGMError, OSError):
    code = "pgm.unwritable"


class DimensionMismatchError(FrameError, ValueError):
    code = "frame.dimension_mismatch"


class NegativeSigmaError(FrameError, ValueError):
    code = "frame.negative_sigma"


# =============================================================================
# Sensing / canal
# =============================================================================


class SensingError(FallwatchError):
    code = "sensing.error"


class InvalidMatrixShapeError(SensingError, ValueError):
    code = "sensing.invalid_shape"


class RankDeficientError(SensingError, ArithmeticError):
    code = "sensing.rank_deficient"


class EmptyMeasurementError(SensingError, ValueError):
    code = "sensing.empty"


class MixedFramesError(SensingError, ValueError):
    code = "sensing.mixed_frames"


class InvalidPayloadError(SensingError, ValueError):
    code = "sensing.invalid_payload"


class InvalidLossModelError(SensingError, ValueError):
    code = "sensing.invalid_loss"


class SeedMismatchError(SensingError, ValueError):
    code = "sensing.seed_mismatch"


class PacketDecodeError(SensingError, ValueError):
    code = "sensing.packet_decode"


# =============================================================================
# Solver
# =============================================================================


class SolverError(FallwatchError):
    code = "solver.error"


class InvalidPenaltyError(SolverError, ValueError):
    code = "solver.invalid_penalty"


class UnknownDenoiserError(SolverError, ValueError):
    code = "solver.unknown_denoiser"


class EmptyTraceError(SolverError, ValueError):
    code = "solver.empty_trace"


class DenoiseError(FallwatchError):
    code = "denoise.error"


class InvalidDenoiseRequestError(DenoiseError, ValueError):
    code = "denoise.invalid_request"


# =============================================================================
# Detecção e classificação
# =============================================================================


class DetectionError(FallwatchError):
    code = "detect.error"


class PartialMeasurementError(DetectionError, ValueError):
    code = "detect.partial_measurement"


class ClassificationError(FallwatchError):
    code = "classify.error"


class NoObjectError(ClassificationError, ValueError):
    code = "classify.no_object"


class SingleClassDatasetError(ClassificationError, ValueError):
    code = "classify.single_class"


class LengthMismatchError(ClassificationError, ValueError):
    code = "classify.length_mismatch"


class ModelFileError(ClassificationError, ValueError):
    code = "classify.model_file"


# =============================================================================
# Configuração
# =============================================================================


class ConfigError(FallwatchError, ValueError):
    code = "config.error"
