"""Synchronization-avoiding coordinate descent for Lasso and linear SVM.

The package provides the (accelerated) block coordinate descent solvers, their
s-step variants that synchronize once every ``s`` iterations, a thread-based
worker group that counts communication rounds and words, and LIBSVM-format
data handling.
"""

from .comm import CommStats, IndexSampler, allreduce_sum, run_spmd
from .datasets import (DatasetStats, LabeledDataset, Partition, dataset_stats,
                       load_libsvm, parse_libsvm, partition, serialize_libsvm)
from .engine import (CostPrediction, RunConfig, WorkerGroup, expected_rounds,
                     expected_words, predict_costs, run_distributed)
from .errors import (ConfigurationError, ContractError, DimensionError, NumericalError,
                     ParseError, ProtocolError, SacdError, SelectionError)
from .kernels import BACKEND
from .lasso import (AccBCDState, BCDState, LassoProblem, SAConfig, accbcd_step,
                    bcd_step, lasso_objective, run_accbcd, run_bcd, sa_accbcd_run,
                    sa_bcd_run, soft_threshold)
from .matrix import (IndexSelection, SparseMatrixCSR, extract_columns, extract_rows,
                     gram, largest_eigenvalue, spmv, spmv_transpose)
from .records import RunRecord, read_csv, write_csv
from .svm import (SvmProblem, SvmState, duality_gap, primal_objective, run_svm_cd,
                  sa_svm_run, svm_cd_step)

__version__ = "0.1.0"
