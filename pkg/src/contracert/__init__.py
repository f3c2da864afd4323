"""Contraction certificates for symmetric recurrent networks and a
contracting-network solver for box-constrained quadratic programs."""

from .contraction_engine import (
    Case,
    ContractionCertificate,
    Model,
    build_gain_matrix,
    build_subspace_split,
    certify,
    certify_fnn,
    certify_hnn,
    tightness_probe,
)
from .linalg_core import (
    EigenDecomposition,
    NormWeight,
    WeightKind,
    euclidean_lognorm,
    is_hurwitz,
    pseudo_inverse,
    sym_eig,
    weighted_lognorm,
    weighted_matrix_norm,
    weighted_vec_norm,
)
from .network_dynamics import Activation, NetworkModel, integrate, measure_contraction
from .polytope_norms import PolytopeSpec, Side, Verdict, check_log_optimality, max_lognorm_over_vertices
from .qp_box_solver import QpProblem, kkt_check, oracle_solve, solve
from .spectral_weights import build_QF, build_QH, theta, verify_splitting

__version__ = "0.1.0"
