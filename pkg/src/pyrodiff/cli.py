"""Command-line entry point.

Subcommands map onto the module pipelines: ``simulate`` runs a model and
the diagnostics enabled in its config, ``verify-kernels`` and
``verify-operator`` run the kernel and operator certification suites,
``bmo-report`` and ``moment-report`` compute cylinder statistics for a
stored field, and ``full-acceptance`` runs the entire acceptance suite.

Every run writes a report bundle (summary.txt, checks.csv and any data
tables) to --out, the REPORT_DIR environment variable, or ./reports, in
that order of preference.  Outputs carry no timestamps, so a fixed
config and seed reproduce the files byte for byte.

Exit codes: 0 all checks passed, 1 check failure, 2 usage or config
error, 3 numerical instability or blow-up.
"""

from __future__ import annotations

import argparse
import math
import os
import sys

import numpy as np

from .acceptance import run_all
from .analysis import (
    cylinder_scan,
    jn_tail,
    moment_report,
    pbmo_seminorm,
    standard_family,
    sup_timeline,
    unit_cylinders,
)
from .config import RunConfig
from .errors import BlowUpError, ConfigError, InstabilityError
from .grids import SpaceTimeField, make_grid
from .kernels import check_A_bounds, check_K_bounds, check_P_bound, check_P_time_derivative
from .operators import check_L2_bound
from .reports import CheckResult, ReportBundle
from .solver import (
    decomposition_residual,
    duhamel_split,
    good_bad_split,
    load_spacetime_field,
    production_domination,
    reconstruction_residuals,
    save_spacetime_field,
    simulate,
)
from .synth import constant_field, cosine_bump, random_smooth_field
from .systems import (
    NonlinearitySpec,
    SystemSpec,
    builtin_model,
    compile_rate_expression,
    validate_assumptions,
)
from . import acceptance

__all__ = ["main"]


def _out_dir(args) -> str:
    return args.out or os.environ.get("REPORT_DIR") or "reports"


def _point(x0) -> str:
    # comma-free coordinate cell, safe inside the CSV tables
    return "/".join(repr(float(c)) for c in np.atleast_1d(x0))


def _load_config(args) -> RunConfig:
    if args.config is None:
        return RunConfig({})
    return RunConfig.from_file(args.config)


def _finish(bundle: ReportBundle, out: str, code_on_fail: int = 1) -> int:
    bundle.write(out)
    print(bundle.summary())
    print(f"report bundle written to {out}/")
    return 0 if bundle.passed else code_on_fail


# ---------------------------------------------------------------------------
# model and initial data construction
# ---------------------------------------------------------------------------


def _build_expression_model(cfg: RunConfig) -> NonlinearitySpec:
    M = cfg.get_int("model.M", 1)
    N = cfg.get_int("model.N", 1)
    p = tuple(
        compile_rate_expression(cfg.get(f"model.p{i + 1}"), M, N) for i in range(M)
    )
    f = tuple(
        compile_rate_expression(cfg.get(f"model.f{j + 1}"), M, N) for j in range(N)
    )
    A = np.asarray(cfg.get_floats("model.A", (1.0,) * (N * M))).reshape(N, M)
    Z = np.asarray(cfg.get_floats("model.Z", (1.0,) * (N * N))).reshape(N, N)
    try:
        return NonlinearitySpec(
            M=M, N=N, p=p, f=f, A=A, Z=Z,
            C_growth=cfg.get_float("model.growth", 1.0),
            rho=cfg.get_float("model.rho", 1.0),
        )
    except ValueError as exc:
        raise ConfigError(f"invalid expression model: {exc}") from exc


def _build_model(cfg: RunConfig) -> SystemSpec:
    name = cfg.get("model", "combustion-exp(1)")
    K1 = cfg.get_float("K1", 1.0)
    K2 = cfg.get_float("K2", 1.0)
    s = cfg.get_float("s", None)
    if name == "expression":
        nl = _build_expression_model(cfg)
        try:
            return SystemSpec(
                nonlinearity=nl,
                eta=np.asarray(cfg.get_floats("eta", (1.0,) * nl.M)),
                kappa=np.asarray(cfg.get_floats("kappa", (2.0,) * nl.N)),
                s=1.0 if s is None else s,
                K1=K1,
                K2=K2,
            )
        except ValueError as exc:
            raise ConfigError(f"invalid system: {exc}") from exc
    try:
        return builtin_model(
            name,
            eta=cfg.get_floats("eta", None),
            kappa=cfg.get_floats("kappa", None),
            s=s,
            K1=K1,
            K2=K2,
        )
    except ValueError as exc:
        raise ConfigError(f"invalid model {name!r}: {exc}") from exc


def _initial_species(cfg, grid, prefix, kind_default, value_default, seed):
    kind = cfg.get(prefix, kind_default)
    value = cfg.get_float(prefix + ".value", value_default)
    if kind == "constant":
        return constant_field(grid, value)
    if kind == "bump":
        sharp = cfg.get_int(prefix + ".sharpness", 4)
        return cosine_bump(grid, height=value, sharpness=sharp)
    if kind == "random":
        return random_smooth_field(grid, seed, amplitude=value, lo=0.0)
    raise ConfigError(
        f"config key {prefix!r}: unknown initial data kind {kind!r} "
        "(expected bump, constant or random)"
    )


def _build_initial(cfg: RunConfig, spec: SystemSpec, grid, seed: int):
    u0 = np.stack([
        _initial_species(cfg, grid, "init.fuel", "bump", spec.K1, seed + 100 + i)
        for i in range(spec.M)
    ])
    v0 = np.stack([
        _initial_species(cfg, grid, "init.product", "constant", 0.0, seed + 200 + j)
        for j in range(spec.N)
    ])
    return u0, v0


def _simulate_known_keys(cfg: RunConfig):
    M = cfg.get_int("model.M", 1)
    N = cfg.get_int("model.N", 1)
    keys = {
        "model", "model.M", "model.N", "model.A", "model.Z", "model.growth",
        "model.rho", "eta", "kappa", "s", "K1", "K2",
        "grid.n", "grid.L", "grid.N",
        "time.T", "time.dt", "time.stride", "ceiling", "seed",
        "init.fuel", "init.fuel.value", "init.fuel.sharpness",
        "init.product", "init.product.value", "init.product.sharpness",
        "diag.duhamel", "diag.decomposition", "diag.goodbad", "diag.goodbad.m",
        "diag.bmo", "diag.bmo.t_min", "diag.moments", "diag.moments.zbar",
        "diag.moments.r", "diag.moments.rho", "diag.moments.count",
        "diag.jn", "diag.operator-checks",
        "tol.positivity", "tol.reconstruction", "tol.decomposition",
        "tol.goodbad", "tol.mass",
        "save.fields",
    }
    keys.update(f"model.p{i + 1}" for i in range(M))
    keys.update(f"model.f{j + 1}" for j in range(N))
    return keys


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------


def cmd_simulate(args) -> int:
    cfg = _load_config(args)
    cfg.ensure_known(_simulate_known_keys(cfg))
    ts = args.tolerance_scale

    spec = _build_model(cfg)
    grid = make_grid(
        cfg.get_int("grid.n", 1),
        cfg.get_float("grid.L", 40.0),
        cfg.get_int("grid.N", 256),
    )
    seed = args.seed if args.seed is not None else cfg.get_int("seed", 0)
    T = cfg.get_float("time.T", 10.0)
    dt = cfg.get_float("time.dt", 0.01)
    # auxiliary re-integration error is O(stored dt^2), so keep every step
    # unless the config trades reconstruction accuracy for memory
    stride = cfg.get_int("time.stride", 1)
    out = _out_dir(args)

    for key in ("tol.positivity", "tol.reconstruction", "tol.decomposition",
                "tol.goodbad", "tol.mass"):
        if cfg.get_float(key, 1.0) <= 0:
            raise ConfigError(f"config key {key!r}: tolerance must be positive")

    bundle = ReportBundle(title=f"simulate {cfg.get('model', 'combustion-exp(1)')}")

    if not args.skip_validate:
        report = validate_assumptions(spec.nonlinearity)
        for c in report.checks:
            bundle.add(
                CheckResult(
                    c.check_id,
                    c.description + f" (worst margin {c.worst_margin:.3g})",
                    float(c.violations),
                    0.0,
                )
            )
        if not report.passed:
            print("assumption validation failed; not simulating", file=sys.stderr)
            return _finish(bundle, out)

    u0, v0 = _build_initial(cfg, spec, grid, seed)
    try:
        traj = simulate(
            spec, grid, u0, v0, T=T, dt=dt, stride=stride,
            ceiling=cfg.get_float("ceiling", 1e6),
        )
    except BlowUpError as exc:
        bundle.add(
            CheckResult(
                "blow-up-detected",
                f"solution crossed the ceiling at t = {exc.t_detect:.6g}",
                float(exc.t_detect), T, "<=", False,
            )
        )
        if exc.partial is not None:
            times, sups = sup_timeline(exc.partial)
            bundle.add_table("timeline", ("t", "sup_v"), zip(times, sups))
        _finish(bundle, out)
        return 3

    times, sups = sup_timeline(traj)
    bundle.add_table("timeline", ("t", "sup_v"), zip(times, sups))

    tolp = cfg.get_float("tol.positivity", 1e-8) * ts
    max_u = max(float(f.frames.max()) for f in traj.u)
    min_v = min(float(f.frames.min()) for f in traj.v)
    min_p = min(float(f.frames.min()) for f in traj.p)
    bundle.add(CheckResult(
        "feb704", "max U over all frames (<= K1 + tol)", max_u, spec.K1 + tolp,
    ))
    bundle.add(CheckResult(
        "sep930_1-positivity", "-(min V) over all frames", -min_v, tolp,
    ))
    bundle.add(CheckResult(
        "sep930_3", "-(min recorded production rate)", -min_p, tolp,
    ))
    masses = np.stack([
        f.frames.reshape(traj.n_frames, -1).sum(axis=1) * grid.cell_volume
        for f in traj.u
    ])
    rise = float(np.diff(masses, axis=1).max(initial=0.0))
    bundle.add(CheckResult(
        "fuel-monotone", "largest increase of total fuel between frames",
        rise, cfg.get_float("tol.mass", 1e-6) * ts,
    ))

    aux = None
    if cfg.get_bool("diag.duhamel", True):
        tol_rec = cfg.get_float("tol.reconstruction", 1e-3) * ts
        aux = duhamel_split(traj)
        res = reconstruction_residuals(aux)
        worst_u = max(v for k, v in res.items() if k.startswith("u"))
        worst_v = max(v for k, v in res.items() if k.startswith("v"))
        bundle.add(CheckResult(
            "jul2212-u", "worst fuel reconstruction residual", worst_u, tol_rec,
        ))
        bundle.add(CheckResult(
            "jul2212-v", "worst product reconstruction residual", worst_v, tol_rec,
        ))
        f_lo = min(float(F.frames.min()) for F in aux.F)
        f_hi = max(float(F.frames.max()) for F in aux.F)
        bundle.add(CheckResult(
            "jul2221", "fuel response outside [0, K1] (worst excursion)",
            max(-f_lo, f_hi - spec.K1), tol_rec,
        ))
        bundle.add(CheckResult(
            "sep0930_4", "worst excess of H_j over sum_i A_ji H_ij",
            production_domination(aux), tol_rec,
        ))

    if cfg.get_bool("diag.decomposition", True):
        if aux is None:
            aux = duhamel_split(traj)
        tol_dec = cfg.get_float("tol.decomposition", 1e-3) * ts
        worst = max(
            decomposition_residual(aux, i, j)
            for i in range(spec.M)
            for j in range(spec.N)
        )
        bundle.add(CheckResult(
            "jul2327", "worst operator-decomposition residual over species pairs",
            worst, tol_dec,
        ))

    if cfg.get_bool("diag.goodbad", False):
        tol_gb = cfg.get_float("tol.goodbad", 1e-3) * ts
        for m in cfg.get_floats("diag.goodbad.m", (1.0, 2.0, 4.0)):
            gb = good_bad_split(traj, 0, 0, m=m, tol=tol_gb)
            for c in gb.checks:
                bundle.add(CheckResult(
                    f"{c.check_id}-m{m:g}", c.description, c.value,
                    c.threshold, c.comparison,
                ))

    family = None
    if cfg.get_bool("diag.bmo", True):
        t_min = cfg.get_float("diag.bmo.t_min", 1.0)
        family = standard_family(grid, T, s=spec.s, t_min=t_min)
        rows = []
        worst_sem = 0.0
        for j in range(spec.N):
            scan = cylinder_scan(traj.v[j], family)
            worst_sem = max(worst_sem, float(scan.mads.max()))
            rows.extend(
                (j + 1, q.t0, _point(q.x0), q.R, mean, mad)
                for q, mean, mad in zip(family, scan.means, scan.mads)
            )
        bundle.add_table(
            "bmo_family", ("species", "t0", "x0", "R", "mean", "mad"), rows
        )
        bundle.add(CheckResult(
            "lem-jul2202" if spec.s == 1.0 else "prop-feb1402",
            f"pbmo seminorm of V over {len(family)} cylinders "
            f"(radii dyadic, t0 >= {t_min:g})",
            worst_sem, math.inf,
        ))

    if cfg.get_bool("diag.moments", True):
        count = cfg.get_int("diag.moments.count", 20)
        cyls = unit_cylinders(grid, T, s=spec.s, count=count, t_floor=1.0)
        rho = cfg.get_float("diag.moments.rho", spec.nonlinearity.rho)
        if rho < 1.0:
            rep = moment_report(
                v=traj.v[0], r=cfg.get_float("diag.moments.r", 1.0),
                rho=rho, cylinders=cyls,
            )
            anchor = "jul152-a"
        else:
            zbar = cfg.get_floats("diag.moments.zbar", (1.0,) * spec.N)
            rep = moment_report(V_fields=traj.v, zbar=zbar, cylinders=cyls)
            anchor = "jul152"
        bundle.add_table(
            "moments", ("t0", "x0", "value"),
            [
                (q.t0, _point(q.x0), val)
                for q, val in zip(rep.cylinders, rep.values)
            ],
        )
        bundle.add(CheckResult(
            anchor,
            f"largest of {count} unit-cylinder moments ({rep.description}; "
            f"max/min {rep.spread:.4g})",
            rep.max_value, math.inf, "<=", rep.passed,
        ))

    if cfg.get_bool("diag.jn", False):
        if family is None:
            family = standard_family(grid, T, s=spec.s, t_min=1.0)
        worst_q = cylinder_scan(traj.v[0], family).worst
        tail = jn_tail(traj.v[0], worst_q)
        bundle.add_table(
            "jn_tail", ("lambda", "fraction"),
            zip(tail.levels, tail.fractions),
        )
        bundle.add(CheckResult(
            "lem-john-nir" if spec.s == 1.0 else "lem-john-nir-a",
            f"fitted tail slope on the worst cylinder (R^2 = "
            f"{tail.r_squared:.3g})",
            tail.slope, 0.0,
        ))

    if cfg.get_bool("diag.operator-checks", False):
        worst = 0.0
        for j in range(spec.N):
            ratio, _ = check_L2_bound(traj.f[j], float(spec.kappa[j]), spec.s)
            worst = max(worst, ratio)
        bundle.add(CheckResult(
            "jul2337" if spec.s == 1.0 else "feb1426",
            "worst kappa*||T f||_2 / ||f||_2 over recorded productions",
            worst, 1.0 + 1e-6 * ts,
        ))

    if cfg.get_bool("save.fields", True):
        os.makedirs(out, exist_ok=True)
        for i in range(spec.M):
            save_spacetime_field(traj.u[i], os.path.join(out, f"u{i + 1}.stf"))
        for j in range(spec.N):
            save_spacetime_field(traj.v[j], os.path.join(out, f"v{j + 1}.stf"))

    return _finish(bundle, out)


# ---------------------------------------------------------------------------
# verification suites
# ---------------------------------------------------------------------------


_KERNEL_KEYS = {
    "kernels.n", "kernels.s", "kernels.kappa",
    "kernels.L1", "kernels.N1", "kernels.L2", "kernels.N2",
}


def cmd_verify_kernels(args) -> int:
    cfg = _load_config(args)
    cfg.ensure_known(_KERNEL_KEYS)
    ts = args.tolerance_scale
    dims = tuple(int(n) for n in cfg.get_floats("kernels.n", (1.0, 2.0)))
    s_list = cfg.get_floats("kernels.s", (0.25, 0.5, 0.75, 1.0))
    kappa = cfg.get_float("kernels.kappa", 1.0)
    shapes = {
        1: (cfg.get_float("kernels.L1", 40.0), cfg.get_int("kernels.N1", 1024)),
        2: (cfg.get_float("kernels.L2", 30.0), cfg.get_int("kernels.N2", 256)),
    }

    bundle = ReportBundle(title="kernel verification")
    for c in acceptance.criterion_kernel_identities(tol_scale=ts).checks:
        bundle.add(c)

    def absorb(report):
        bundle.add(CheckResult(
            report.bound_name,
            f"held-out violations (fitted B = {report.fitted_constant:.4g}, "
            f"worst ratio {report.worst_ratio:.6f})",
            float(report.violations), 0.0,
        ))

    for n in dims:
        if n not in shapes:
            raise ConfigError(f"config key 'kernels.n': unsupported dimension {n}")
        for rep in check_K_bounds(kappa=kappa, n=n):
            absorb(rep)
        grid = make_grid(n, *shapes[n])
        for s in s_list:
            absorb(check_P_bound(grid, s))
            if s < 1.0:
                absorb(check_P_time_derivative(grid, s))
            for rep in check_A_bounds(grid, s, kappa=kappa):
                absorb(rep)

    return _finish(bundle, _out_dir(args))


def cmd_verify_operator(args) -> int:
    cfg = _load_config(args)
    cfg.ensure_known(set())
    ts = args.tolerance_scale
    seed = args.seed if args.seed is not None else 0
    bundle = ReportBundle(title="operator verification")
    for res in (
        acceptance.criterion_operator_l2(seed=seed + 10, tol_scale=ts),
        acceptance.criterion_decomposition(seed=seed + 20, tol_scale=ts),
        acceptance.criterion_cross_method(seed=seed + 21, tol_scale=ts),
        acceptance.criterion_hoelder(seed=seed + 22, tol_scale=ts),
    ):
        for c in res.checks:
            bundle.add(c)
    return _finish(bundle, _out_dir(args))


# ---------------------------------------------------------------------------
# stored-field reports
# ---------------------------------------------------------------------------


_BMO_KEYS = {
    "input.field", "s", "family.t_min", "family.n_centers", "family.n_times",
    "family.r_min", "family.r_max", "jn",
}


def _load_field(cfg) -> SpaceTimeField:
    path = cfg.get("input.field")
    try:
        return load_spacetime_field(path)
    except OSError as exc:
        raise ConfigError(f"cannot read field file {path}: {exc}") from exc


def cmd_bmo_report(args) -> int:
    cfg = _load_config(args)
    cfg.ensure_known(_BMO_KEYS)
    field = _load_field(cfg)
    grid = field.grid
    s = cfg.get_float("s", 1.0)
    T = float(field.times[-1])
    kwargs = {}
    if cfg.get("family.r_min", None) is not None:
        kwargs["r_min"] = cfg.get_float("family.r_min")
    if cfg.get("family.r_max", None) is not None:
        kwargs["r_max"] = cfg.get_float("family.r_max")
    family = standard_family(
        grid, T, s=s,
        t_min=cfg.get_float("family.t_min", 0.0),
        n_centers_per_dim=cfg.get_int("family.n_centers", 4),
        n_times=cfg.get_int("family.n_times", 3),
        **kwargs,
    )
    scan = cylinder_scan(field, family)
    bundle = ReportBundle(title=f"bmo report for {cfg.get('input.field')}")
    bundle.add_table(
        "bmo_family", ("t0", "x0", "R", "mean", "mad"),
        [
            (q.t0, _point(q.x0), q.R, mean, mad)
            for q, mean, mad in zip(family, scan.means, scan.mads)
        ],
    )
    radii = sorted({q.R for q in family})
    bundle.add(CheckResult(
        "lem-jul2202" if s == 1.0 else "prop-feb1402",
        f"pbmo seminorm over {len(family)} cylinders, radii {radii}",
        float(scan.mads.max()), math.inf,
    ))
    if cfg.get_bool("jn", False):
        tail = jn_tail(field, scan.worst)
        bundle.add_table(
            "jn_tail", ("lambda", "fraction"), zip(tail.levels, tail.fractions)
        )
        bundle.add(CheckResult(
            "lem-john-nir" if s == 1.0 else "lem-john-nir-a",
            "fitted tail slope on the worst cylinder",
            tail.slope, 0.0,
        ))
    return _finish(bundle, _out_dir(args))


_MOMENT_KEYS = {
    "input.field", "s", "moment.zbar", "moment.r", "moment.rho",
    "cylinders.count", "cylinders.t_floor",
}


def cmd_moment_report(args) -> int:
    cfg = _load_config(args)
    cfg.ensure_known(_MOMENT_KEYS)
    field = _load_field(cfg)
    s = cfg.get_float("s", 1.0)
    T = float(field.times[-1])
    cyls = unit_cylinders(
        field.grid, T, s=s,
        count=cfg.get_int("cylinders.count", 20),
        t_floor=cfg.get_float("cylinders.t_floor", 1.0),
    )
    rho = cfg.get_float("moment.rho", 1.0)
    if rho < 1.0:
        rep = moment_report(
            v=field, r=cfg.get_float("moment.r", 1.0), rho=rho, cylinders=cyls
        )
        anchor = "jul152-a"
    else:
        zbar = cfg.get_floats("moment.zbar", (1.0,))
        rep = moment_report(V_fields=(field,), zbar=zbar, cylinders=cyls)
        anchor = "jul152"
    bundle = ReportBundle(title=f"moment report for {cfg.get('input.field')}")
    bundle.add_table(
        "moments", ("t0", "x0", "value"),
        [
            (q.t0, _point(q.x0), val)
            for q, val in zip(rep.cylinders, rep.values)
        ],
    )
    bundle.add(CheckResult(
        anchor,
        f"largest unit-cylinder moment ({rep.description}; "
        f"max/min {rep.spread:.4g})",
        rep.max_value, math.inf, "<=", rep.passed,
    ))
    return _finish(bundle, _out_dir(args))


# ---------------------------------------------------------------------------
# full acceptance
# ---------------------------------------------------------------------------


def cmd_full_acceptance(args) -> int:
    cfg = _load_config(args)
    cfg.ensure_known(set())
    results = run_all(tol_scale=args.tolerance_scale)
    bundle = ReportBundle(title="full acceptance suite")
    for res in results:
        print(res.line())
        for c in res.checks:
            bundle.add(CheckResult(
                f"{res.index:02d}:{c.check_id}", c.description, c.value,
                c.threshold, c.comparison, c.passed,
            ))
    bundle.write(_out_dir(args))
    n_ok = sum(1 for r in results if r.passed)
    print(f"{n_ok}/{len(results)} criteria passed; bundle in {_out_dir(args)}/")
    return 0 if n_ok == len(results) else 1


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pyrodiff",
        description="simulate thermo-diffusive systems and certify their estimates",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    commands = {
        "simulate": cmd_simulate,
        "verify-kernels": cmd_verify_kernels,
        "verify-operator": cmd_verify_operator,
        "bmo-report": cmd_bmo_report,
        "moment-report": cmd_moment_report,
        "full-acceptance": cmd_full_acceptance,
    }
    for name, fn in commands.items():
        p = sub.add_parser(name)
        p.add_argument("--config", metavar="PATH", default=None)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--out", metavar="DIR", default=None)
        p.add_argument("--skip-validate", action="store_true")
        p.add_argument("--tolerance-scale", type=float, default=1.0)
        p.set_defaults(fn=fn)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    if args.tolerance_scale <= 0:
        print("--tolerance-scale must be positive", file=sys.stderr)
        return 2
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (BlowUpError, InstabilityError) as exc:
        print(f"numerical instability: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
