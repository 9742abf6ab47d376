"""The two kernel identities behind C2 are independent.

For Phi = [[conj v1, conj v2], [0, 0]] with v1 = z/sqrt2, v2 = 1/sqrt2 the
first identity holds, while Ker T_{zbar conj(Phi)} contains a function that
conj(Phi) does not annihilate: any g with v1 g1 + v2 g2 = 1, e.g. (0, sqrt2).
"""

import numpy as np

from superopt.certifier import check_C2
from superopt.factory import example_symbol
from superopt.laurent import eval_on_grid

v = check_C2(example_symbol("ex2"))
print("C2:", v.status, "|", v.note)
for half in ("first", "conj"):
    d = v.detail[half]
    print(f"  {half:5s} half: Toeplitz kernel dim {d['dim_toeplitz_kernel']}, "
          f"pointwise kernel dim {d['dim_pointwise_kernel']}, excess {d['excess']} at degree {d['degree']}")

w = v.witnesses[-1].polys()[0]
G = eval_on_grid(w, 64)
f = G.values[:, :, 0]
scale = G.points[0] / np.sqrt(2) * f[0, 0] + f[0, 1] / np.sqrt(2)
g = f / scale
print("witness, normalized so v1 g1 + v2 g2 = 1:", np.round(g[0], 12))
