"""A 2x2 symbol with constant singular values that is still not badly approximable.

The symbol diag(1, zbar^2/2) V^* has singular values 1 and 1/2 at every
point of the circle and analytic Schmidt families, yet its Hankel norm is
strictly below its sup norm, so zero is not a best analytic approximation.
Multiplying by zbar repairs this: the shifted symbol is very badly
approximable.
"""

from superopt.approx import best_approx
from superopt.certifier import certify
from superopt.factory import example_symbol
from superopt.hankel import hankel_norm
from superopt.laurent import eval_on_grid

phi = example_symbol("ex3")
print("sup norm      ", eval_on_grid(phi).sup_norm)
print("Hankel norm   ", hankel_norm(phi).norm, "(sqrt(10)/4 = 0.790569...)")
R = best_approx(phi, 6)
print("minimax oracle", R.value, "with an analytic F of degree", R.degree)
print()
print(certify(phi).report())
print()
print(certify(example_symbol("ex3_shifted")).report())
