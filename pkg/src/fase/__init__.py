"""Selective Extrapolation (SE) and Fast Selective Extrapolation (FaSE)."""
from fase.dictionary import Dictionary, generate_dictionary, load_dictionary, save_dictionary, union_dictionaries
from fase.errors import FaseError
from fase.fast import GramTable, apply_model, build_gram_tables, fase_extrapolate, initial_scalar_products
from fase.grid import ExtrapConfig, LossMask, WeightField, build_weight_field, psnr_over_region
from fase.opcount import OpCounts, counted_run, predict_op_counts
from fase.selective import SparseModel, se_extrapolate
from fase.transform import fft_gram_table, fft_initial_products

__all__ = [
    'Dictionary',
    'ExtrapConfig',
    'FaseError',
    'GramTable',
    'LossMask',
    'OpCounts',
    'SparseModel',
    'WeightField',
    'apply_model',
    'build_gram_tables',
    'build_weight_field',
    'counted_run',
    'fase_extrapolate',
    'fft_gram_table',
    'fft_initial_products',
    'generate_dictionary',
    'initial_scalar_products',
    'load_dictionary',
    'predict_op_counts',
    'psnr_over_region',
    'save_dictionary',
    'se_extrapolate',
    'union_dictionaries',
]
