"""tnkit: dense tensor algebra, tensor networks, decompositions and tensor trains in numpy."""

from .dense import (
    copy_tensor, diag_embed, diag_extract, fiber, frobenius_norm, hadamard, inner, khatri_rao,
    khatri_rao_list, kronecker, matricize, mode_n_matrix_product, mode_n_vector_product, outer,
    partial_trace, permute, poly_eval, slice_, trace, unmatricize, vectorize,
)
from .linalg import numerical_rank, svd, sym_sqrt, truncated_svd
from .network import (
    CutBoundResult, Node, SpecSyntaxError, TNGraph, contract, contraction_order, cut_weight,
    lower, parse_spec, plan_cost, rank_bound,
)
from .decomp import (
    CPForm, TuckerForm, cp_fit_gd, cp_gradient, cp_loss, cp_reconstruct, cp_unfold, hosvd,
    multilinear_rank, tucker_orthogonalize, tucker_reconstruct,
)
from .tt import (
    MPO, TT, mpo_from_dense, mpo_matvec, mpo_reconstruct, random_tt, tt_add, tt_als_fit,
    tt_canonicalize, tt_entry, tt_hadamard, tt_inner, tt_norm, tt_reconstruct, tt_round,
    tt_scale, tt_sum_entries, tt_svd,
)
from .grad import (
    JacobianNetwork, finite_diff_jacobian, jacobian_wrt_node, loss_gradient, mpo_layer_grad,
)
from .prob import (
    BornMachine, InvalidDistribution, ProbTensor, born_conditional, born_marginal,
    born_normalizer, born_prob, conditional, marginal, prob_validate,
)
from .random_tn import (
    IdentityReport, RandomSpec, analytic_expectation, gaussian_tensor, mc_expectation,
    verify_identity,
)

__version__ = "0.1.0"
