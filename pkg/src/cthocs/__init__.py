"""Compressive higher-order cyclostationary statistics for modulation classification."""
from .classify import (CLASSES, ConfusionMatrix, FeatureValue, NMSEReport, classify_min_distance,
                       extract_feature, nmse, theory_table)
from .errors import (ClockMismatchError, ConfigurationError, CthocsError, IncompleteInputError, ShapeError,
                     UndefinedNMSEError)
from .estimators import (CandidateFrequencyPlan, CyclicStatEstimate, assemble_cumulant, bias_oracle,
                         estimate_compressive_cyclic_cumulant, estimate_compressive_cyclic_moment,
                         variance_probe)
from .harness import ExperimentConfig, RunRecord, run_classification_experiment, run_nmse_experiment
from .kernels import BACKEND
from .partitions import Partition, PartitionSet, bell_number, enumerate_partitions, frequency_sum_tuples, \
    moment_to_cumulant
from .sampling import (LagSpec, NonuniformStream, SamplingMask, acquire, apply_mask, lag_product_nonuniform,
                       lag_product_uniform, make_mask)
from .signal_synth import (ComplexSeries, Modulation, SignalParams, SymbolAlphabet, add_noise_at_cnr,
                           alphabet_for, generate_signal, theoretical_cyclic_cumulant, theoretical_cyclic_moment,
                           theoretical_feature, theoretical_symbol_cumulant, white_noise)
from .spectral import (ALL, CfarConfig, Peak, PeakList, RipReport, Spectrum, cfar_detect, project_at_frequencies,
                       project_at_frequency, project_unrescaled, rip_bound_check, zero_padded_dft)

__version__ = "0.1.0"
