"""Kernel-based instance transfer for sequence labeling.

Modules: ``corpus`` (data types, IO, splits), ``embeddings``, ``transfer``
(kernels, ranking, replication plans), ``neural`` (RNN/ERNN), ``baselines``
(HMM, CRF), ``cotrain``, ``evaluation``, ``synthetic``, ``experiments`` and
the ``cli``.
"""

from .errors import (ConfigError, ContractError, DataError, DomainError, FormatError,
                     ParseError, TagSetError, TrainingDiverged, TransferNerError)

__version__ = "0.1.0"

__all__ = [
    "ConfigError", "ContractError", "DataError", "DomainError", "FormatError",
    "ParseError", "TagSetError", "TrainingDiverged", "TransferNerError", "__version__",
]
