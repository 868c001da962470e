"""Batch active learning for pool-based experimental design."""

from .acquisition import ACQUISITIONS, MODEL_KINDS, AcquisitionInput, acquire, compatibility
from .core import (
    AcquisitionBatch,
    AlignedDataset,
    CycleRecord,
    DescriptorTable,
    OutcomeTable,
    PoolState,
    commit_batch,
    make_pool_state,
)
from .data import SyntheticSpec, align, generate_synthetic, load_descriptor_table, load_outcome_table
from .kernels import BACKEND
from .loop import RunSpec, cycle_schedule, run_active_learning

__version__ = "0.1.0"

__all__ = [
    "ACQUISITIONS",
    "BACKEND",
    "MODEL_KINDS",
    "AcquisitionBatch",
    "AcquisitionInput",
    "AlignedDataset",
    "CycleRecord",
    "DescriptorTable",
    "OutcomeTable",
    "PoolState",
    "RunSpec",
    "SyntheticSpec",
    "acquire",
    "align",
    "commit_batch",
    "compatibility",
    "cycle_schedule",
    "generate_synthetic",
    "load_descriptor_table",
    "load_outcome_table",
    "make_pool_state",
    "run_active_learning",
]
