"""Homodyne tomography toolkit for characterizing optical devices.

Synthetic homodyne data for coherent signals through lossy/amplifying
channels, pattern-function state reconstruction (density matrix, photon
distribution, Wigner function) and estimation of loss and gain parameters.
"""

from .estimate import (
    ChannelFit,
    LossEstimate,
    channel_loglik,
    estimate_alpha,
    estimate_loss,
    fit_channel,
    loss_sweep,
    mean_photon_adaptive,
)
from .kernels import (
    adaptive_number_kernel,
    matrix_kernel,
    moment_kernel,
    null_function,
    optimal_mu,
)
from .model import (
    ChannelSpec,
    DerivedChannel,
    HomodyneDataset,
    HomodyneRecord,
    SignalSpec,
    calibrate,
    derive_channel,
    homodyne_pdf,
    sample_dataset,
)
from .tomo import (
    DensityMatrix,
    EstimateResult,
    WignerGrid,
    average_kernel,
    photon_distribution,
    reconstruct_rho,
    wigner_from_rho,
)

__version__ = "0.1.0"
