"""Command-line front end.

Every subcommand reads one JSON config, expands its parameter grid, runs the
grid points in order and writes ``results.csv`` and ``results.json`` (plus
``decomposition.svg`` for ``decompose``) into the output directory.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from pathlib import Path

from .io import ConfigError, build_domain, load_config, to_csv, to_json

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

SUBCOMMAND_HELP = {
    "decompose": "Whitney cubes, shadow and chain diagnostics, SVG drawing",
    "seminorm": "full and truncated weighted seminorms",
    "compare": "full over truncated seminorm ratio",
    "zeta": "distance zeta function with divergence flag",
    "dims": "box-counting dimension, Assouad codimension bounds, homogeneity constant",
    "a1": "empirical Muckenhoupt A1 constant of d^-alpha",
    "density": "cutoff convergence table and density regime",
    "characterize": "Hardy integral finiteness against cutoff convergence",
    "hardy": "fractional Hardy ratio",
    "p-eta": "cube-adapted mollification error and support",
    "oracle": "quadrature against Monte Carlo",
}
SUBCOMMANDS = tuple(SUBCOMMAND_HELP)


class NumericalFailure(RuntimeError):
    """A quantity required to be finite came out divergent."""


def _configure_threads(n: int | None):
    if n is None:
        return
    if n < 1:
        raise ConfigError("--threads must be at least 1")
    if "numba" not in sys.modules:
        os.environ["NUMBA_NUM_THREADS"] = str(n)
        return
    import numba

    numba.set_num_threads(min(n, numba.config.NUMBA_NUM_THREADS))


# -- helpers -----------------------------------------------------------------------


class _Run:
    """Shared state of one invocation: config, domain, decomposition, field."""

    def __init__(self, cfg):
        from .expr import ExprSyntaxError, compile_expr

        self.cfg = cfg
        self.opts = cfg.options
        self.domain = build_domain(cfg.domain, cfg.base_dir)
        try:
            self.f = compile_expr(cfg.function)
        except ExprSyntaxError as exc:
            raise ConfigError(f"function {cfg.function!r}: {exc} (expected {exc.expected})") from exc
        except ValueError as exc:
            raise ConfigError(f"function {cfg.function!r}: {exc}") from exc
        self._W = None

    @property
    def W(self):
        if self._W is None:
            from .whitney import decompose

            self._W = decompose(self.domain, self.cfg.depth)
        return self._W

    def option(self, key, default):
        return self.opts.get(key, default)

    def number_list(self, key, default) -> list:
        vals = self.option(key, default)
        vals = vals if isinstance(vals, list) else [vals]
        if not vals or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in vals):
            raise ConfigError(f"option {key!r} must be a nonempty list of numbers")
        return vals

    def grid(self) -> list:
        from .seminorm import SpaceParams

        out = []
        for g in self.cfg.grid():
            try:
                out.append(SpaceParams(**g))
            except ValueError as exc:
                raise ConfigError(f"invalid parameters {g}: {exc}") from exc
        return out


def _param_cols(sp) -> dict:
    return {"s": sp.s, "p": sp.p, "alpha": sp.alpha, "beta": sp.beta, "theta": sp.theta}


def _require_finite(run, est, what):
    if run.option("require_finite", False) and not est.finite:
        raise NumericalFailure(f"{what} diverges where a finite value was required")


# -- subcommands -------------------------------------------------------------------


def _decompose(run):
    from .whitney import admissibility_constant, chain, shadow, whitney_violations

    W = run.W
    highlight = ()
    path = None
    if "shadow" in run.opts:
        spec = run.opts["shadow"]
        try:
            highlight = shadow(W, int(spec["cube"]), float(spec["rho"]))
        except (KeyError, TypeError, IndexError) as exc:
            raise ConfigError("option 'shadow' needs {'cube': index, 'rho': value} with a valid index") from exc
    if "chain" in run.opts:
        ends = run.opts["chain"]
        if not (isinstance(ends, list) and len(ends) == 2 and all(isinstance(e, int) and 0 <= e < len(W) for e in ends)):
            raise ConfigError(f"option 'chain' needs two cube indices in [0, {len(W)})")
        path = chain(W, W.cube(ends[0]), W.cube(ends[1]), run.option("chain_weight", "hops"))
    rows = [{"index": i, "level": int(W.level[i]), "ix": int(W.ix[i]), "iy": int(W.iy[i]),
             "side": float(W.side[i]), "dist": float(W.dist[i])} for i in range(len(W))]
    summary = {
        "cubes": len(W),
        "covered_area": float(W.covered_volume),
        "domain_area": float(run.domain.area),
        "whitney_violations": int(len(whitney_violations(W))),
        "admissibility_constant": float(admissibility_constant(W, seed=run.cfg.seed)),
        "decomposition": W.to_json(),
    }
    if path is not None:
        summary["chain"] = [int(c) for c in path.cubes]
    if len(highlight):
        summary["shadow"] = [int(c) for c in highlight]
    svg = W.to_svg(highlight=highlight, chain=path)
    return rows, summary, {"decomposition.svg": svg}


def _seminorm(run):
    from .seminorm import full_seminorm, truncated_seminorm

    sym = bool(run.option("symmetric", False))
    rows = []
    for sp in run.grid():
        full = full_seminorm(run.f, run.domain, sp, W=run.W, quad_order=run.cfg.quad_order, symmetric=sym)
        trunc = truncated_seminorm(run.f, run.domain, sp, W=run.W, quad_order=run.cfg.quad_order, symmetric=sym)
        _require_finite(run, full, "the seminorm")
        rows.append({**_param_cols(sp), "full": full.value, "full_divergent": full.divergent, "full_error": full.error,
                     "truncated": trunc.value, "truncated_divergent": trunc.divergent,
                     "truncated_error": trunc.error, "full_trace": list(full.refinement_trace),
                     "depths": list(full.depths)})
    return rows, {"runs": rows}, {}


def _compare(run):
    from .seminorm import comparability_ratio, full_seminorm, truncated_seminorm

    rows = []
    q = run.cfg.quad_order
    for sp in run.grid():
        full = full_seminorm(run.f, run.domain, sp, W=run.W, quad_order=q)
        trunc = truncated_seminorm(run.f, run.domain, sp, W=run.W, quad_order=q)
        ratio = comparability_ratio(run.f, run.domain, sp, W=run.W, quad_order=q)
        rows.append({**_param_cols(sp), "full": full.value, "truncated": trunc.value, "ratio": float(ratio),
                     "diagnostic": ratio.diagnostic})
    return rows, {"runs": rows}, {}


def _zeta(run):
    from .dimension import distance_zeta

    mode = run.option("mode", "increment")
    if mode not in ("increment", "growth"):
        raise ConfigError("option 'mode' must be 'increment' or 'growth'")
    rows = []
    for q in run.number_list("q", [0.0, 0.5, 1.0, 1.2]):
        if not q < 2:
            raise ConfigError("zeta exponents q must be below 2")
        z = distance_zeta(run.W, float(q), run.cfg.quad_order, mode=mode)
        rows.append({"q": z.q, "value": z.value, "divergent": z.divergent, "error": z.error,
                     "growth_divergent": z.growth_divergent, "partial_values": list(z.partial_values),
                     "growth_factors": list(z.growth_factors), "depths": list(z.depths)})
    return rows, {"runs": rows}, {}


def _dims(run):
    import numpy as np

    from .dimension import assouad_codim_bounds, box_counting_dim, homogeneity_constant
    from .geometry import BoundarySampler

    E = BoundarySampler.from_domain(run.domain)
    diam = E.diam
    scales = run.number_list("scales", list(np.geomspace(0.4 * diam, 0.004 * diam, 10)))
    try:
        box = box_counting_dim(E, scales)
    except ValueError as exc:
        raise ConfigError(f"option 'scales': {exc}") from exc
    lo, hi = assouad_codim_bounds(E, centers=int(run.option("centers", 40)),
                                  mc_samples=int(run.option("mc_samples", 4000)), seed=run.cfg.seed)
    rows = [
        {"quantity": "box_dimension", "value": box.value, "lower": box.confidence_interval[0],
         "upper": box.confidence_interval[1]},
        {"quantity": "assouad_codimension", "value": None, "lower": lo, "upper": hi},
        {"quantity": "box_codimension", "value": 2.0 - box.value, "lower": 2.0 - box.confidence_interval[1],
         "upper": 2.0 - box.confidence_interval[0]},
    ]
    if "sigma" in run.opts:
        K = homogeneity_constant(E, float(run.opts["sigma"]), samples=int(run.option("homogeneity_samples", 1000)),
                                 seed=run.cfg.seed)
        rows.append({"quantity": "homogeneity_constant", "value": K, "lower": None, "upper": None})
    extra = {"scales": list(box.scales_used), "counts": list(box.counts), "fit_residual": box.fit_residual}
    return rows, {"runs": rows, "box_counting": extra}, {}


def _a1(run):
    from .dimension import muckenhoupt_a1_constant

    first = int(run.W.level.min())
    depths = [int(k) for k in run.number_list("cube_depths", list(range(first, run.cfg.depth + 1)))]
    if min(depths) < first:
        raise ConfigError(f"cube depths must be at least {first}, the level of the coarsest Whitney cube")
    rows = []
    for a in run.number_list("alpha", [0.0, 0.5, 1.5]):
        consts = muckenhoupt_a1_constant(run.domain, float(a), depths, run.cfg.quad_order)
        rows.extend({"alpha": float(a), "depth": k, "a1_constant": c} for k, c in zip(depths, consts))
    return rows, {"runs": rows}, {}


def _n_list(run) -> list:
    ns = [int(n) for n in run.number_list("n_list", [4, 8, 16, 32, 64])]
    if any(n < 1 for n in ns) or any(b <= a for a, b in zip(ns, ns[1:])):
        raise ConfigError("option 'n_list' must be increasing positive integers")
    return ns


def _density(run):
    from .approx import density_experiment

    codim = run.opts.get("codim")
    if isinstance(codim, list):
        codim = tuple(float(c) for c in codim)
    rows = []
    for sp in run.grid():
        for r in density_experiment(run.domain, sp, run.f, _n_list(run), run.W, run.cfg.quad_order, codim):
            rows.append({**_param_cols(sp), "n": r.n, "seminorm": r.seminorm, "lp_norm": r.lp_norm,
                         "lemma_bound_term": r.lemma_bound_term, "classification": r.classification})
    return rows, {"runs": rows}, {}


def _characterize(run):
    from .approx import characterization_check

    rows = []
    for sp in run.grid():
        rep = characterization_check(run.domain, sp, run.f, _n_list(run), run.W, run.cfg.quad_order)
        rows.append({**_param_cols(sp), "hardy_lhs": rep.hardy_lhs, "lhs_finite": rep.lhs_finite,
                     "trace": list(rep.trace), "trace_vanishes": rep.trace_vanishes, "verdict": rep.verdict})
    return rows, {"runs": rows}, {}


def _hardy(run):
    from .seminorm import hardy_ratio

    R = float(run.option("R", 1.0))
    xi = run.option("xi", 0)
    if xi not in (0, 1) or not R > 0:
        raise ConfigError("hardy needs R > 0 and xi in {0, 1}")
    rows = []
    for sp in run.grid():
        ratio = hardy_ratio(run.f, run.domain, sp, R=R, xi=xi, W=run.W, quad_order=run.cfg.quad_order)
        rows.append({**_param_cols(sp), "R": R, "xi": xi, "ratio": float(ratio), "diagnostic": ratio.diagnostic})
    return rows, {"runs": rows}, {}


def _p_eta(run):
    from .approx import MollifiedField, MollifierSpec
    from .fields import Scale, Sum
    from .seminorm import full_seminorm, lp_norm

    eps = float(run.option("epsilon", 0.1))
    rows = []
    for delta in run.number_list("delta", [eps / 4, eps / 16]):
        try:
            spec = MollifierSpec(float(delta), eps)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        diff = Sum(MollifiedField(run.f, run.W, spec), Scale(-1.0, run.f))
        for sp in run.grid():
            semi = full_seminorm(diff, run.domain, sp, W=run.W, quad_order=run.cfg.quad_order)
            lp = lp_norm(diff, run.domain, 0.0, run.W, run.cfg.quad_order, p=sp.p)
            rows.append({**_param_cols(sp), "delta": float(delta), "epsilon": eps, "seminorm_difference": semi.value,
                         "lp_difference": lp.value ** (1.0 / sp.p) if math.isfinite(lp.value) else lp.value})
    return rows, {"runs": rows}, {}


def _oracle(run):
    from .fields import WeightField
    from .montecarlo import mc_seminorm
    from .seminorm import full_seminorm

    n_outer = int(run.option("n_outer", 20000))
    n_inner = int(run.option("n_inner", 64))
    rows = []
    for sp in run.grid():
        quad = full_seminorm(run.f, run.domain, sp, W=run.W, quad_order=run.cfg.quad_order)
        mc = mc_seminorm(run.f, run.domain, sp.s, sp.p, WeightField.distance_power(-sp.alpha),
                         WeightField.distance_power(-sp.beta), n_outer, n_inner, seed=run.cfg.seed)
        tol = max(0.05 * abs(mc.value), 3.0 * mc.stderr)
        rows.append({**_param_cols(sp), "quadrature": quad.value, "monte_carlo": mc.value, "mc_stderr": mc.stderr,
                     "agree": bool(abs(quad.value - mc.value) <= tol)})
    return rows, {"runs": rows}, {}


_HANDLERS = {
    "decompose": _decompose,
    "seminorm": _seminorm,
    "compare": _compare,
    "zeta": _zeta,
    "dims": _dims,
    "a1": _a1,
    "density": _density,
    "characterize": _characterize,
    "hardy": _hardy,
    "p-eta": _p_eta,
    "oracle": _oracle,
}


# -- entry points ------------------------------------------------------------------


def run(subcommand: str, cfg, out_dir=None) -> int:
    """Run one subcommand on a loaded config and write its outputs."""
    from .seminorm import HypothesisViolation, QuadratureError
    from .whitney import DecompositionError

    if subcommand not in _HANDLERS:
        print(f"error: unknown subcommand {subcommand!r}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        rows, payload, files = _HANDLERS[subcommand](_Run(cfg))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (HypothesisViolation, QuadratureError, DecompositionError, NumericalFailure) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    out = Path(out_dir if out_dir is not None else cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    header = {"config_hash": cfg.config_hash, "seed": cfg.seed, "subcommand": subcommand}
    (out / "results.csv").write_text(to_csv(rows, header))
    (out / "results.json").write_text(to_json({**header, "config": cfg.to_dict(), "results": payload}))
    for name, text in files.items():
        (out / name).write_text(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gagliardo", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="subcommand", required=True, metavar="SUBCOMMAND")
    for name, text in SUBCOMMAND_HELP.items():
        p = sub.add_parser(name, help=text, description=text)
        p.add_argument("--config", required=True, metavar="PATH", help="experiment config (JSON)")
        p.add_argument("--out", metavar="DIR", help="output directory (overrides output_dir)")
        p.add_argument("--threads", type=int, metavar="N", help="numba worker threads")
        p.add_argument("--seed", type=int, metavar="N", help="overrides the config seed")
        p.add_argument("--depth", type=int, metavar="N", help="overrides the config depth")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        _configure_threads(args.threads)
        cfg = load_config(args.config, {"seed": args.seed, "depth": args.depth})
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return run(args.subcommand, cfg, args.out)


if __name__ == "__main__":
    sys.exit(main())
