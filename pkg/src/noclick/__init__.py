"""Simulation of on/off photodetection and maximum-likelihood reconstruction
of photon-number distributions from no-click frequencies."""

__version__ = "0.1.0"

from .detection import (EfficiencyGrid, GridDesignError, NoClickCurve, closed_form_noclick,
                        design_grid, model_noclick, noclick_curve, noclick_probability)
from .metrics import (MetricsReport, TruncationError, fidelity, g2_displaced_thermal,
                      metrics_report, moments, total_variation)
from .reconstruct import (EnergyConstraint, ReconstructionConfig, ReconstructionError,
                          ReconstructionResult, em_step, em_step_constrained, log_likelihood,
                          normalized_frequencies, reconstruct)
from .simulate import NoClickDataset, NoiseSpec, exact_dataset, perturb_dataset, simulate_dataset
from .specfun import LaguerreOrder, LaguerreOverflowError, laguerre, log_laguerre_neg
from .states import (InvalidModelError, PhotonDistribution, SourceModel, closed_form_multimode_pmf,
                     coherent_pmf, convolve_pmf, displaced_thermal_pmf, thermal_pmf,
                     total_photon_pmf)
