"""Command line front end.

Subcommands: ``certify``, ``compose``, ``examples``, ``approx``, ``weights``
and ``hankel``.  Every JSON document embeds the run configuration.  Exit
codes: 0 when every requested check is conclusive, 2 when some verdict is
inconclusive (or an oracle run is flagged), 1 on input or validation errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .approx import best_approx, check_sv_identity, superoptimal_approx
from .certifier import CertifyConfig, _jsonable, certify
from .factory import EXAMPLE_NAMES, CanonicalRecipe, FactoryError, compose_canonical, paper_example, perturb
from .hankel import KernelStabilizationError, hankel_norm, kernel_stabilize
from .laurent import (
    DEFAULT_TOL_C1,
    GridError,
    MatrixLaurentPoly,
    SymbolFormatError,
    default_grid_size,
    eval_on_grid,
    load_symbol,
    next_pow2,
    singular_profile,
)
from .weights import (
    SingularGram,
    admissible_check,
    extremal_subspace,
    lemma_orthogonality_residual,
    pinch,
    q_value,
    weight_from_phi,
)

EXIT_OK, EXIT_ERROR, EXIT_INCONCLUSIVE = 0, 1, 2


class UsageError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    """Budgets and tolerances of one CLI run."""

    grid: int | None = None
    eps: float = 1e-6
    dmin: int | None = None
    dmax: int = 64
    tol_c1: float = DEFAULT_TOL_C1
    seed: int = 0
    out: str | None = None

    def __post_init__(self):
        if self.eps <= 0 or self.tol_c1 <= 0:
            raise UsageError("tolerances must be positive")
        if self.grid is not None and (self.grid < 1 or self.grid & (self.grid - 1)):
            raise UsageError(f"--grid must be a power of two, got {self.grid}")
        if self.dmax < 1 or (self.dmin is not None and not 0 <= self.dmin < self.dmax):
            raise UsageError("need 0 <= dmin < dmax")

    def grid_for(self, phi: MatrixLaurentPoly) -> int:
        floor = next_pow2(8 * phi.band + 8)
        if self.grid is None:
            return default_grid_size(phi.band)
        if self.grid < floor:
            raise UsageError(f"--grid {self.grid} below the floor {floor} for band {phi.band}")
        return self.grid

    def certify_config(self, phi: MatrixLaurentPoly) -> CertifyConfig:
        return CertifyConfig(N=self.grid_for(phi), eps=self.eps, dmin=self.dmin, dmax=self.dmax, tol_c1=self.tol_c1)

    def to_json_dict(self) -> dict:
        d = asdict(self)
        d.pop("out")
        return d


def _config(args) -> RunConfig:
    return RunConfig(grid=args.grid, eps=args.eps, dmin=args.dmin, dmax=args.dmax, tol_c1=args.tol_c1,
                     seed=args.seed, out=args.out)


def _emit(doc: dict, args, path: str | None = None) -> None:
    text = json.dumps(_jsonable(doc), indent=None if args.json else 2, sort_keys=True)
    target = path or args.out
    if target:
        Path(target).write_text(text + "\n")
    else:
        sys.stdout.write(text + "\n")


def _read_json(path: str):
    text = Path(path).read_text()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise SymbolFormatError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None


# -- subcommands ----------------------------------------------------------------------


def cmd_certify(args) -> int:
    phi = load_symbol(args.symbol)
    cfg = _config(args)
    checks = tuple(args.checks.split(",")) if args.checks else None
    cert = certify(phi, cfg.certify_config(phi), checks=checks)
    doc = cert.to_json_dict()
    doc["config"] = cfg.to_json_dict()
    _emit(doc, args)
    if not args.quiet:
        sys.stderr.write(cert.report() + "\n")
    return EXIT_OK if cert.conclusive else EXIT_INCONCLUSIVE


def cmd_compose(args) -> int:
    try:
        recipe = CanonicalRecipe.from_json_dict(_read_json(args.recipe))
    except FactoryError as exc:
        raise SymbolFormatError(str(exc)) from None
    cfg = _config(args)
    phi = compose_canonical(recipe)
    if args.perturb:
        phi = perturb(phi, args.perturb, cfg.seed)
    prof = singular_profile(eval_on_grid(phi, cfg.grid_for(phi)), cfg.tol_c1)
    doc = {"symbol": phi.to_json_dict(), "intended": {"levels": list(recipe.levels),
                                                     "multiplicities": list(recipe.multiplicities)},
           "profile": prof.to_json_dict(), "config": cfg.to_json_dict()}
    if args.emit:
        Path(args.emit).write_text(json.dumps(phi.to_json_dict(), indent=2, sort_keys=True) + "\n")
    _emit(doc, args)
    return EXIT_OK


def cmd_examples(args) -> int:
    cfg = _config(args)
    if not args.name:
        _emit({"examples": list(EXAMPLE_NAMES), "config": cfg.to_json_dict()}, args)
        return EXIT_OK
    if args.name not in EXAMPLE_NAMES:
        raise UsageError(f"unknown example '{args.name}'; choose from {', '.join(EXAMPLE_NAMES)}")
    phi, expected = paper_example(args.name)
    if args.perturb:
        phi = perturb(phi, args.perturb, cfg.seed)
        expected = {}
    if args.emit:
        Path(args.emit).write_text(json.dumps(phi.to_json_dict(), indent=2, sort_keys=True) + "\n")
    _emit({"name": args.name, "symbol": phi.to_json_dict(), "expected": expected, "config": cfg.to_json_dict()}, args)
    return EXIT_OK


def cmd_approx(args) -> int:
    phi = load_symbol(args.symbol)
    cfg = _config(args)
    N = cfg.grid_for(phi)
    if args.mode == "nehari":
        R = best_approx(phi, args.degree, N)
        doc = {"mode": "nehari", "result": R.to_json_dict()}
    else:
        R = superoptimal_approx(phi, args.degree, N=N)
        doc = {"mode": "superoptimal", "result": R.to_json_dict(), "sv_identity": check_sv_identity(phi, R)}
    doc["config"] = cfg.to_json_dict()
    _emit(doc, args)
    return EXIT_OK if R.converged else EXIT_INCONCLUSIVE


def cmd_weights(args) -> int:
    phi = load_symbol(args.symbol)
    cfg = _config(args)
    W = weight_from_phi(phi, args.level, cfg.grid_for(phi), cfg.tol_c1)
    rep = admissible_check(phi, W, args.degree)
    E, fam = extremal_subspace(phi, W, rep.degree)
    doc = {"level": args.level, "sigma_k": W.provenance["sigma_k"], "admissible": rep.to_json_dict(),
           "extremal": {"dim": len(E), "pointwise_dim": fam.dim, "constant_dim": fam.constant_dim,
                        "basis": E.to_json_dict()}}
    status = EXIT_OK
    if len(E):
        q = q_value(phi, W, E, rep.degree)
        doc["q"] = q
        doc["lemma_orthogonality_residual"] = lemma_orthogonality_residual(phi, W, E, rep.degree)
        a = args.a if args.a is not None else q * W.provenance["sigma_k"]
        if a > 0 and fam.constant_dim:
            doc["pinched"] = {"a": a, "admissible": admissible_check(phi, pinch(W, fam, a), rep.degree).to_json_dict()}
    else:
        status = EXIT_INCONCLUSIVE
    doc["config"] = cfg.to_json_dict()
    _emit(doc, args)
    return status


def cmd_hankel(args) -> int:
    phi = load_symbol(args.symbol)
    cfg = _config(args)
    doc = {"config": cfg.to_json_dict()}
    status = EXIT_OK
    if args.norm or not args.kernel:
        hn = hankel_norm(phi)
        doc.update({"norm": hn.norm, "stabilized_at": hn.degree, "maximizers": hn.maximizers.to_json_dict(),
                    "essential_norm": 0.0})
    if args.kernel:
        try:
            d, rep = kernel_stabilize(phi, cfg.eps, cfg.dmin, cfg.dmax)
            doc["kernel"] = {"stabilized_at": d, "dim": rep["dim"], "trajectory": rep["trajectory"],
                             "max_angle": rep["max_angle"], "basis": rep["kernel"].to_json_dict()}
        except KernelStabilizationError as exc:
            doc["kernel"] = {"verdict": "inconclusive", "message": str(exc), "trajectory": exc.report["trajectory"]}
            status = EXIT_INCONCLUSIVE
    _emit(doc, args)
    return status


# -- parser ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--grid", type=int, default=None, help="grid size N (power of two)")
    common.add_argument("--eps", type=float, default=1e-6, help="kernel tolerance")
    common.add_argument("--dmin", type=int, default=None, help="smallest polynomial degree tried")
    common.add_argument("--dmax", type=int, default=64, help="polynomial degree budget")
    common.add_argument("--tol-c1", dest="tol_c1", type=float, default=DEFAULT_TOL_C1,
                        help="flatness tolerance relative to s_0")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", default=None, help="write JSON here instead of stdout")
    fmt = common.add_mutually_exclusive_group()
    fmt.add_argument("--json", action="store_true", help="compact JSON")
    fmt.add_argument("--pretty", action="store_true", help="indented JSON (default)")

    p = argparse.ArgumentParser(prog="superopt", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("certify", parents=[common], help="certify a symbol")
    c.add_argument("symbol")
    c.add_argument("--checks", default=None, help="comma separated subset of checks")
    c.add_argument("--quiet", action="store_true", help="no report on stderr")
    c.set_defaults(func=cmd_certify)

    c = sub.add_parser("compose", parents=[common], help="multiply out a canonical recipe")
    c.add_argument("recipe")
    c.add_argument("--emit", default=None, help="also write the symbol JSON here")
    c.add_argument("--perturb", type=float, default=0.0, help="add a seeded analytic perturbation")
    c.set_defaults(func=cmd_compose)

    c = sub.add_parser("examples", parents=[common], help="worked example symbols")
    c.add_argument("--name", default=None)
    c.add_argument("--emit", default=None, help="write the symbol JSON here")
    c.add_argument("--perturb", type=float, default=0.0)
    c.set_defaults(func=cmd_examples)

    c = sub.add_parser("approx", parents=[common], help="best or superoptimal approximation oracle")
    c.add_argument("symbol")
    c.add_argument("--mode", choices=("nehari", "superoptimal"), default="nehari")
    c.add_argument("--degree", type=int, default=None, help="approximant degree (default 2K + 4)")
    c.set_defaults(func=cmd_approx)

    c = sub.add_parser("weights", parents=[common], help="spectral weight, admissibility, q and pinching")
    c.add_argument("symbol")
    c.add_argument("--level", type=int, default=0)
    c.add_argument("--degree", type=int, default=None)
    c.add_argument("--a", type=float, default=None, help="pinching constant (default q * sigma_k)")
    c.set_defaults(func=cmd_weights)

    c = sub.add_parser("hankel", parents=[common], help="Hankel norm and Toeplitz kernel stabilization")
    c.add_argument("symbol")
    c.add_argument("--norm", action="store_true")
    c.add_argument("--kernel", action="store_true")
    c.set_defaults(func=cmd_hankel)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    np.seterr(all="ignore")
    try:
        return args.func(args)
    except (SymbolFormatError, UsageError, GridError, FactoryError, SingularGram, OSError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_ERROR
    except ValueError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_ERROR


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
