"""Recover the observable Laplacian eigenvalues of an unknown multiagent
network from a single finite sequence of scalar output measurements.

The estimator side sees only the measured values and their time domain; the
oracle side computes, from ground truth, exactly which eigenvalues are
visible, so every recovery can be verified.
"""

from .dynamics import (
    AgentModel,
    MeasurementSeries,
    ObservationSpec,
    random_observation,
    read_measurements,
    simulate_ct_integrator,
    simulate_ct_network,
    simulate_dt_integrator,
    simulate_dt_network,
    write_measurements,
)
from .experiments import (
    ExperimentConfig,
    RunRecord,
    emit_plot_data,
    run_batch,
    run_experiment,
)
from .graphs import (
    Graph,
    LaplacianKind,
    SpectrumDecomposition,
    SystemMatrix,
    build_graph,
    eig_reference,
    generate_preferential_attachment,
    generate_ring,
    laplacian,
    read_graph_file,
    write_graph_file,
)
from .oracle import (
    MatchReport,
    SpectralMeasure,
    match_spectra,
    measure_moments,
    pbh_observable_eigenvalues,
    spectral_weights,
    support_set,
)
from .recovery import (
    SpectralEstimate,
    binomial_lower_triangular,
    build_hankel,
    ct_log_transform,
    numerical_rank,
    nu_sequence_ct,
    nu_sequence_dt,
    polynomial_roots,
    prony_coefficients,
    read_estimate,
    recover_ct_spectrum,
    recover_dt_spectrum,
    recover_network_spectrum,
    unmix_moments,
    write_estimate,
)

__version__ = "0.1.0"
