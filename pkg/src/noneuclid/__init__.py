"""Monotone operator methods in weighted l1 / l-infinity norms.

Norms, logarithmic norms and weak pairings; resolvent and forward-step
operators with certified Lipschitz bounds; seven zero-finding iterations;
projection onto log-norm balls; equilibria and Lipschitz certificates of
recurrent networks.
"""

from .norms import Family, NormSpec, argmax_index_set, induced_matrix_norm, log_norm, vector_norm, weak_pairing
from .operators import (
    AffineOperator,
    Certificate,
    Operator,
    ScalarActivation,
    SeparableProx,
    Subdifferential,
    affine_certificates,
    parse_activation,
    scalar_prox_catalog,
)
from .resolvents import (
    ResolventSettings,
    alpha_star,
    fig1_curves,
    forward_step,
    reflected_resolvent,
    resolvent,
)
from .solvers import (
    CertificationError,
    InvalidStepSize,
    SolveConfig,
    SolveResult,
    cayley_solve,
    douglas_rachford_solve,
    forward_backward_solve,
    forward_step_solve,
    km_solve,
    peaceman_rachford_solve,
    picard_solve,
    proximal_point_solve,
)
from .projection import LogNormBall, project_matrix, project_row
from .rnn import RnnModel, equilibrium, lipschitz_bound, lipschitz_bound_prior, random_model
from .estimators import ImplicitRnn, LogNormProjector

__version__ = "0.1.0"
