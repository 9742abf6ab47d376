"""Spectral weights, extremal functions and pinching.

W_0 = max(Phi^* Phi, sigma_0^2) is an admissible weight with equality
attained; its extremal functions span the top Schmidt family pointwise.
Shrinking the weight to q * sigma_0 off that family keeps it admissible.
"""

from superopt.factory import example_symbol
from superopt.laurent import eval_on_grid
from superopt.schmidt import schmidt_family
from superopt.weights import (
    admissible_check,
    extremal_subspace,
    lemma_orthogonality_residual,
    pinch,
    q_value,
    weight_from_phi,
)

phi = example_symbol("ex3_shifted")
W = weight_from_phi(phi, 0)
rep = admissible_check(phi, W)
print("lambda_max of (H^*H, G):", rep.lam_max, "at degree", rep.degree)
E, fam = extremal_subspace(phi, W, rep.degree)
S = schmidt_family(eval_on_grid(phi, W.N), 1.0, 0.25)
print("extremal functions:", len(E), "| angle to the top Schmidt family:", fam.max_angle_to(S))
q = q_value(phi, W, E, rep.degree)
print("q =", q)
print("orthogonality residual:", lemma_orthogonality_residual(phi, W, E, rep.degree))
pinched = admissible_check(phi, pinch(W, fam, q), rep.degree)
print("pinched weight lambda_max:", pinched.lam_max, "->", "admissible" if pinched.passed else "not admissible")
