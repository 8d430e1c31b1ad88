"""Classical sequence labelers: a first-order HMM and a linear-chain CRF."""

from .crf import CrfParams, CrfTagger, crf_decode, crf_train
from .hmm import HmmParams, HmmTagger, hmm_decode, hmm_train

__all__ = [
    "CrfParams", "CrfTagger", "crf_decode", "crf_train",
    "HmmParams", "HmmTagger", "hmm_decode", "hmm_train",
]
