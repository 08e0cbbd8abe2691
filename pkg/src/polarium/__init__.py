"""Polar codes: constructions, BP and BP-list decoding, SC/SCL baselines, AWGN simulation."""

from polarium.bp import DecodeCandidate, MessageMemory, StagePermutation, bp_decode, boxplus, pe_update
from polarium.bpl import BplConfig, BplResult, bpl_decode, euclidean_select, select_permutations
from polarium.crc import CRC16, CrcConfig, crc_append, crc_check
from polarium.polar import (PolarCode, assemble_u, bhattacharyya_parameters, construct,
                            construct_bhattacharyya, construct_rm_polar, encode, extract_info,
                            g_matrix_check, polar_transform, row_weight)
from polarium.sc import ml_decode_bruteforce, sc_decode, scl_decode

__version__ = "0.1.0"
