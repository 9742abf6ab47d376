"""Canonical factorizations in, very badly approximable symbols out.

Random canonical recipes are multiplied out and certified; a small analytic
perturbation of each is then rejected, and the minimax oracle shows that the
perturbed symbol is strictly closer to the analytic functions than its norm.
"""

from superopt.approx import best_approx
from superopt.certifier import certify_very_badly_approximable
from superopt.factory import compose_canonical, perturb, random_recipe
from superopt.laurent import eval_on_grid

print(f"{'seed':>4} {'shape':>6} {'band':>4}  {'levels':<28} {'VBA':<6} {'perturbed':<10} {'dist':>8} {'norm':>8}")
for seed in range(8):
    recipe = random_recipe(seed)
    phi = compose_canonical(recipe)
    ok = certify_very_badly_approximable(phi).status("very_badly_approximable")
    pp = perturb(phi, 0.05, 1000 + seed)
    bad = certify_very_badly_approximable(pp).status("very_badly_approximable")
    dist = best_approx(pp).value
    levels = ", ".join(f"{x:.3f}" for x in recipe.levels)
    print(f"{seed:>4} {str(phi.shape):>6} {phi.band:>4}  {levels:<28} {ok:<6} {bad:<10} "
          f"{dist:8.5f} {eval_on_grid(pp).sup_norm:8.5f}")
