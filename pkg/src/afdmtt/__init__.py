"""MIMO-AFDM channel estimation with tensor-train decomposition.

Modules
-------
tensor      unfoldings, Khatri-Rao, SVD helpers, TT-SVD
waveform    system configuration, DAFT modulation, chirp-periodic prefix
channel     path model, STAF channel, time-domain reference receiver
pilot       embedded pilot frame and pilot-window extraction
estimator   TT-SVD estimator of angle, Doppler, delay and gain
cpals       CP-ALS baseline
bounds      Fisher information, CRB and closed-form ZZB
metrics     alignment, MSE/NMSE, QAM, LMMSE, BER, SE
sweep       Monte-Carlo driver
config/cli  experiment files and the ``afdmtt`` command
"""
from .channel import (PathParams, PathRanges, PathSet, awgn, build_staf_channel,
                      effective_channel, effective_channels, h_entry, sample_paths,
                      steering_vector, time_domain_receive)
from .cpals import cp_als, estimate_from_cpd
from .estimator import EstimationResult, estimate, reconstruct_channel
from .pilot import FrameLayout, PilotObservation, build_frame, extract_pilot_tensor
from .tensor import CPDFactors, TTCores, tt_svd
from .waveform import SystemConfig, add_cpp, demodulate, modulate, remove_cpp

__all__ = [
    "SystemConfig", "modulate", "demodulate", "add_cpp", "remove_cpp",
    "PathParams", "PathSet", "PathRanges", "sample_paths", "steering_vector",
    "h_entry", "build_staf_channel", "effective_channel", "effective_channels", "time_domain_receive",
    "awgn", "FrameLayout", "PilotObservation", "build_frame",
    "extract_pilot_tensor", "CPDFactors", "TTCores", "tt_svd",
    "EstimationResult", "estimate", "reconstruct_channel", "cp_als",
    "estimate_from_cpd",
]
