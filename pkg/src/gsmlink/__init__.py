"""Link-level simulation and ABEP analysis for uplink multiuser GSM-MIMO."""

__version__ = "0.1.0"

from .modulation import (Alphabet, GsmCodebook, build_alphabet, build_codebook,
                         build_pattern_set, bits_per_channel_use, gsm_encode,
                         gsm_decode, matched_configs, parse_alphabet)
from .channel import (FlatChannel, SelectiveChannel, NoiseModel, sample_flat,
                      sample_selective, snr_to_sigma2, transmit_flat)
from .analysis import (pep, value_sets, phi_counts, alpha_spectrum,
                       union_bound_direct, union_bound_reduced, BoundResult)
from .detect import (DetectorParams, SoftOutput, GramModel, ml_detect,
                     mmse_detect, mpgsm_detect, gram_model, chemp_detect,
                     hard_bits)
from ._kernels import BACKEND, get_kernels

__all__ = [
    "__version__", "BACKEND", "get_kernels",
    "Alphabet", "GsmCodebook", "build_alphabet", "build_codebook",
    "build_pattern_set", "bits_per_channel_use", "gsm_encode", "gsm_decode",
    "matched_configs", "parse_alphabet",
    "FlatChannel", "SelectiveChannel", "NoiseModel", "sample_flat",
    "sample_selective", "snr_to_sigma2", "transmit_flat",
    "pep", "value_sets", "phi_counts", "alpha_spectrum",
    "union_bound_direct", "union_bound_reduced", "BoundResult",
    "DetectorParams", "SoftOutput", "GramModel", "ml_detect", "mmse_detect",
    "mpgsm_detect", "gram_model", "chemp_detect", "hard_bits",
]
