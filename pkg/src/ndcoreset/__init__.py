"""Stratified uniform coresets for the F1 score and the Matthews correlation coefficient."""

from .data import Dataset, LabeledPoint, load_csv, load_sparse_text, stratified_subsample
from .metrics import ContingencyTable, LinearQuery, contingency, dv_distance, f1, mcc
from .samplers import (
    Coreset,
    SampleSizePlan,
    f1_sample_size,
    kmeans_lightweight_sampler,
    leverage_sampler,
    lewis_sampler,
    mcc_sample_size,
    stratified_uniform,
    uniform,
)

__version__ = "0.1.0"
