"""Desk-scale acceptance suite.

Twelve property-based criteria covering the whole pipeline: semigroup
exactness, kernel identities and envelope suites, operator bounds, the
decomposition identity, two full desk-scale model runs with their
statistics, the cone decomposition, tail empirics, and a negative
control.  Each criterion returns a ``CriterionResult`` holding ordinary
``CheckResult`` rows, so the command line and the test suite share one
source of truth.

The two expensive model runs are computed once per process and shared by
the criteria that need them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .analysis import (
    cylinder_scan,
    jn_tail,
    moment_report,
    pbmo_seminorm,
    standard_family,
    sup_timeline,
    unit_cylinders,
)
from .errors import BlowUpError
from .grids import Field, SpaceTimeField, apply_semigroup, make_grid
from .kernels import (
    check_A_bounds,
    check_K_bounds,
    check_P_bound,
    check_P_time_derivative,
    fractional_kernel_P,
    heat_kernel,
    kernel_A,
    singular_kernel_K,
)
from .operators import apply_T, apply_T_via_J, check_L2_bound, hoelder_time_modulus, solve_forced
from .reports import CheckResult
from .solver import decomposition_defect, good_bad_split, simulate
from .synth import constant_field, cosine_bump, random_forcing
from .systems import (
    NonlinearitySpec,
    SystemSpec,
    builtin_model,
    compile_rate_expression,
    validate_assumptions,
)

__all__ = ["CriterionResult", "ALL_CRITERIA", "run_all"]


@dataclass(frozen=True)
class CriterionResult:
    index: int
    name: str
    checks: tuple
    notes: tuple = ()

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def line(self) -> str:
        state = "PASS" if self.passed else "FAIL"
        n_ok = sum(1 for c in self.checks if c.passed)
        return (
            f"[{state}] criterion {self.index:02d} {self.name}: "
            f"{n_ok}/{len(self.checks)} checks"
        )

    def detail_lines(self):
        out = [self.line()]
        out.extend("  " + c.line() for c in self.checks)
        out.extend("  note: " + n for n in self.notes)
        return out


# ---------------------------------------------------------------------------
# 1. semigroup exactness
# ---------------------------------------------------------------------------


def criterion_semigroup_exactness(seed: int = 0, tol_scale: float = 1.0):
    """Single-mode decay matches the symbol to 1e-10 relative."""
    grid = make_grid(1, 2.0 * np.pi, 128)
    rng = np.random.default_rng(seed)
    s_choices = (0.25, 0.5, 0.75, 1.0)
    worst = 0.0
    cases = 0
    while cases < 50:
        j = int(rng.integers(1, 41))
        kappa = float(10.0 ** rng.uniform(-0.6, 0.6))
        s = s_choices[int(rng.integers(0, 4))]
        t = float(10.0 ** rng.uniform(-1.3, 0.3))
        exponent = t * kappa * float(j * j) ** s
        if exponent > 9.0:
            continue  # decay below ~1e-4 drowns in transform roundoff
        cases += 1
        u0 = Field(grid, np.cos(j * grid.x))
        ut = apply_semigroup(u0, t, kappa, s)
        analytic = math.exp(-exponent)
        worst = max(worst, abs(float(ut.values[0]) - analytic) / analytic)
    return CriterionResult(
        1,
        "semigroup-exactness",
        (
            CheckResult(
                "semigroup-exactness",
                "worst relative single-mode decay error over 50 draws",
                worst,
                1e-10 * tol_scale,
            ),
        ),
    )


# ---------------------------------------------------------------------------
# 2. kernel identities
# ---------------------------------------------------------------------------


def _grid_points(grid):
    z = grid.min_image
    if grid.n == 1:
        return z
    return np.stack(np.meshgrid(z, z, indexing="ij"), axis=-1)


def criterion_kernel_identities(tol_scale: float = 1.0):
    """Mass identities at four times plus the K = Lap g difference study."""
    tol = 1e-8 * tol_scale
    times = (0.01, 0.1, 1.0, 10.0)
    checks = []

    # N = 1024 for n = 2: the sum of Delta g aliases like |xi|^2 e^{-kt|xi|^2}
    # at xi = 2 pi / dx, which sits right at 1e-8 for N = 512 at t = 0.01
    for n, L, N, kap in ((1, 40.0, 1024, 0.5), (2, 30.0, 1024, 0.25)):
        grid = make_grid(n, L, N)
        pts = _grid_points(grid)
        worst_g = max(
            abs(float(heat_kernel(t, pts, kap, n).sum()) * grid.cell_volume - 1.0)
            for t in times
        )
        worst_k = max(
            abs(float(singular_kernel_K(t, pts, kap, n).sum()) * grid.cell_volume)
            for t in times
        )
        checks.append(
            CheckResult(f"mass-g-n{n}", f"|int g - 1| over t in {times}", worst_g, tol)
        )
        checks.append(
            CheckResult(f"mass-K-n{n}", f"|int K| over t in {times}", worst_k, tol)
        )

    for n, L, N in ((1, 40.0, 1024), (2, 30.0, 256)):
        grid = make_grid(n, L, N)
        worst_p = 0.0
        worst_a = 0.0
        for s in (0.25, 0.75):
            for t in times:
                P = fractional_kernel_P(t, grid, s)
                A = kernel_A(t, grid, s, kappa=1.0)
                worst_p = max(
                    worst_p, abs(float(P.values.sum()) * grid.cell_volume - 1.0)
                )
                worst_a = max(
                    worst_a, abs(float(A.values.sum()) * grid.cell_volume)
                )
        checks.append(
            CheckResult(
                f"mass-P-n{n}",
                f"|int P - 1| over t in {times}, s in (0.25, 0.75)",
                worst_p,
                tol,
            )
        )
        checks.append(
            CheckResult(
                f"mass-A-n{n}",
                f"|int A| over t in {times}, s in (0.25, 0.75)",
                worst_a,
                tol,
            )
        )

    # K against a centered second difference of g, dx-halving study
    t0, kap = 0.5, 1.0
    errs = []
    for N in (512, 1024):
        grid = make_grid(1, 40.0, N)
        g = heat_kernel(t0, grid.min_image, kap, 1)
        lap = (np.roll(g, -1) - 2.0 * g + np.roll(g, 1)) / grid.dx**2
        K = singular_kernel_K(t0, grid.min_image, kap, 1)
        errs.append(float(np.abs(lap - K).max()))
    order = math.log2(errs[0] / errs[1])
    checks.append(
        CheckResult(
            "K-equals-lap-g",
            f"sup |D2 g - K| at N = 1024 (coarse error {errs[0]:.3e})",
            errs[1],
            1e-3 * tol_scale,
        )
    )
    checks.append(
        CheckResult(
            "K-equals-lap-g-order",
            "observed order of the second-difference error under dx-halving",
            order,
            1.9,
            comparison=">=",
        )
    )
    return CriterionResult(2, "kernel-identities", tuple(checks))


# ---------------------------------------------------------------------------
# 3. kernel bound suite
# ---------------------------------------------------------------------------


def criterion_bound_suite(tol_scale: float = 1.0):
    """Zero held-out violations for every fitted kernel envelope."""
    checks = []

    def absorb(report, suffix=""):
        checks.append(
            CheckResult(
                report.bound_name + suffix,
                f"held-out violations (fitted B = {report.fitted_constant:.4g}, "
                f"worst ratio {report.worst_ratio:.6f}, "
                f"{report.sample_count} samples)",
                float(report.violations),
                0.0,
            )
        )

    for n in (1, 2):
        for rep in check_K_bounds(kappa=1.0, n=n):
            absorb(rep, f"[n={n}]")

    for n, L, N in ((1, 40.0, 1024), (2, 30.0, 256)):
        grid = make_grid(n, L, N)
        for s in (0.25, 0.5, 0.75, 1.0):
            absorb(check_P_bound(grid, s))
            if s < 1.0:
                absorb(check_P_time_derivative(grid, s))
            for rep in check_A_bounds(grid, s, kappa=1.0):
                absorb(rep)

    return CriterionResult(3, "kernel-bound-suite", tuple(checks))


# ---------------------------------------------------------------------------
# 4. operator L2 bound
# ---------------------------------------------------------------------------


def criterion_operator_l2(seed: int = 10, tol_scale: float = 1.0):
    """kappa ||T F||_2 <= ||F||_2 over 100 random bounded forcings."""
    grid = make_grid(1, 10.0, 128)
    rng = np.random.default_rng(seed)
    dt = 0.02
    times = dt * np.arange(49)
    s_cycle = (1.0, 0.5, 0.75, 0.25)
    worst = {True: 0.0, False: 0.0}  # classical / fractional
    for case in range(100):
        s = s_cycle[case % 4]
        kappa = float(10.0 ** rng.uniform(-0.5, 0.5))
        forcing = random_forcing(grid, rng, amplitude=1.0, modes=4, n_terms=3)
        F = SpaceTimeField(grid, 0.0, dt, forcing.sample(times))
        ratio, _ = check_L2_bound(F, kappa, s)
        worst[s == 1.0] = max(worst[s == 1.0], ratio)
    bound = 1.0 + 1e-6 * tol_scale
    return CriterionResult(
        4,
        "operator-l2-bound",
        (
            CheckResult(
                "jul2337",
                "worst kappa*||T F||_2 / ||F||_2, classical cases",
                worst[True],
                bound,
            ),
            CheckResult(
                "feb1426",
                "worst kappa*||T F||_2 / ||F||_2, fractional cases",
                worst[False],
                bound,
            ),
        ),
    )


# ---------------------------------------------------------------------------
# 5. decomposition identity
# ---------------------------------------------------------------------------


def criterion_decomposition(seed: int = 20, tol_scale: float = 1.0):
    """H = F + (kappa - eta) T_kappa F to 1e-4; exact at kappa = eta."""
    grid = make_grid(1, 10.0, 256)
    forcing = random_forcing(grid, seed, amplitude=1.0, modes=3, n_terms=4,
                             omega_max=2.0)
    eta = 1.0
    checks = []

    def defect(kappa, dt, n_steps):
        times = dt * np.arange(n_steps + 1)
        return decomposition_defect(
            grid, forcing.sample(times), dt, eta, kappa, s=1.0
        )

    for kappa in (0.5, 2.0):
        d = defect(kappa, 1e-3, 500)
        checks.append(
            CheckResult(
                "jul2327",
                f"sup |H - F - (k-e) T F| at kappa/eta = {kappa / eta}",
                d,
                1e-4 * tol_scale,
            )
        )
    checks.append(
        CheckResult(
            "jul2327-equal",
            "defect at kappa = eta (identical discrete systems)",
            defect(1.0, 1e-3, 500),
            1e-10 * tol_scale,
        )
    )
    d1 = defect(2.0, 1e-3, 500)
    d2 = defect(2.0, 5e-4, 1000)
    checks.append(
        CheckResult(
            "jul2327-order",
            f"observed order under dt-halving (defects {d1:.3e} -> {d2:.3e})",
            math.log2(d1 / d2),
            1.9,
            comparison=">=",
        )
    )
    return CriterionResult(5, "decomposition-identity", tuple(checks))


# ---------------------------------------------------------------------------
# 6. cross-method operator agreement
# ---------------------------------------------------------------------------


def criterion_cross_method(seed: int = 21, tol_scale: float = 1.0):
    """The PDE route and the J-derivative route agree to O(dt^2)."""
    grid = make_grid(1, 10.0, 256)
    forcing = random_forcing(grid, seed, amplitude=1.0, modes=3, n_terms=4,
                             omega_max=2.0)
    checks = []

    def gap(s, dt, n_steps):
        times = dt * np.arange(n_steps + 1)
        F = SpaceTimeField(grid, 0.0, dt, forcing.sample(times))
        a = apply_T(F, 1.5, s).phi
        b = apply_T_via_J(F, 1.5, s).phi
        return float(np.abs(a.frames - b.frames).max())

    for s in (1.0, 0.5):
        g1 = gap(s, 1e-3, 500)
        checks.append(
            CheckResult(
                "jul2604" if s == 1.0 else "jul2604-frac",
                f"sup |Phi_pde - Phi_J| at s = {s}",
                g1,
                1e-4 * tol_scale,
            )
        )
    g1 = gap(1.0, 1e-3, 500)
    g2 = gap(1.0, 5e-4, 1000)
    checks.append(
        CheckResult(
            "jul2604-order",
            f"observed order under dt-halving (gaps {g1:.3e} -> {g2:.3e})",
            math.log2(g1 / g2),
            1.9,
            comparison=">=",
        )
    )
    return CriterionResult(6, "cross-method-agreement", tuple(checks))


# ---------------------------------------------------------------------------
# 7. Hoelder-in-time stability
# ---------------------------------------------------------------------------


def criterion_hoelder(seed: int = 22, tol_scale: float = 1.0):
    """The fitted alpha = 0.9 modulus moves < 10% under dt-halving."""
    grid = make_grid(1, 10.0, 128)
    forcing = random_forcing(grid, seed, amplitude=1.0, modes=4, n_terms=4,
                             omega_max=2.0)

    def modulus(dt, n_steps):
        times = dt * np.arange(n_steps + 1)
        J = SpaceTimeField(
            grid, 0.0, dt, solve_forced(grid, forcing.sample(times), dt, 1.0, 1.0)
        )
        return hoelder_time_modulus(J, 0.9, forcing.sup_bound)

    m1 = modulus(2e-3, 500)
    m2 = modulus(1e-3, 1000)
    return CriterionResult(
        7,
        "hoelder-stability",
        (
            CheckResult(
                "jul2614",
                f"relative drift of the fitted modulus ({m1:.6g} -> {m2:.6g})",
                abs(m2 / m1 - 1.0),
                0.10 * tol_scale,
            ),
        ),
    )


# ---------------------------------------------------------------------------
# 8 and 9. desk-scale model runs
# ---------------------------------------------------------------------------


@lru_cache(maxsize=1)
def _theorem1_run():
    grid = make_grid(1, 40.0, 1024)
    spec = builtin_model("combustion-exp(1)", eta=1.0, kappa=2.0, s=1.0,
                         K1=1.0, K2=1.0)
    u0 = cosine_bump(grid, height=1.0, sharpness=4)
    v0 = constant_field(grid, 0.0)
    traj = simulate(spec, grid, u0, v0, T=50.0, dt=0.01, stride=10)
    return grid, spec, traj


@lru_cache(maxsize=1)
def _theorem2_run():
    grid = make_grid(1, 40.0, 1024)
    spec = builtin_model("frac-subexp(0.5)", eta=1.0, kappa=2.0, K1=1.0, K2=1.0)
    u0 = cosine_bump(grid, height=1.0, sharpness=4)
    v0 = constant_field(grid, 0.0)
    traj = simulate(spec, grid, u0, v0, T=50.0, dt=0.01, stride=10)
    return grid, spec, traj


def _desk_scale_checks(grid, spec, traj, moment_kind, anchors, tol_scale):
    """The shared protocol: bounds, plateau, seminorm drift, moments."""
    report = validate_assumptions(spec.nonlinearity)
    checks = [
        CheckResult(
            "assumptions",
            "structural assumption validation of the model",
            float(sum(1 for c in report.checks if not c.passed)),
            0.0,
        )
    ]

    max_u = max(float(f.frames.max()) for f in traj.u)
    min_v = min(float(f.frames.min()) for f in traj.v)
    checks.append(
        CheckResult("feb704", "max U over all frames", max_u,
                    spec.K1 + 1e-8 * tol_scale)
    )
    checks.append(
        CheckResult("sep930_1-positivity", "-(min V) over all frames", -min_v,
                    1e-8 * tol_scale)
    )

    T = traj.T
    times, sups = sup_timeline(traj)
    mid = float(sups[(times >= T / 4) & (times <= T / 2)].max())
    late = float(sups[times >= T / 2].max())
    checks.append(
        CheckResult(
            anchors["plateau"],
            f"sup-timeline late/mid excess (mid {mid:.6g}, late {late:.6g})",
            late / mid - 1.0,
            0.05 * tol_scale,
        )
    )

    v = traj.v[0]
    n_half = int(round((T / 2) / v.dt))
    v_half = SpaceTimeField(grid, 0.0, v.dt, v.frames[: n_half + 1])
    fam_half = standard_family(grid, T / 2, s=spec.s, t_min=1.0)
    fam_full = standard_family(grid, T, s=spec.s, t_min=1.0)
    sem_half = pbmo_seminorm(v_half, fam_half)
    sem_full = pbmo_seminorm(v, fam_full)
    checks.append(
        CheckResult(
            anchors["drift"],
            f"pbmo seminorm drift between horizons ({sem_half:.6g} -> "
            f"{sem_full:.6g})",
            abs(sem_full / sem_half - 1.0),
            0.10 * tol_scale,
        )
    )

    cyls = unit_cylinders(grid, T, s=spec.s, count=20, t_floor=1.0)
    sup_v = float(v.frames.max())
    if moment_kind == "exp":
        rep = moment_report(V_fields=traj.v, zbar=[1.0], cylinders=cyls)
        cap = math.exp(sup_v)
    else:
        rep = moment_report(v=v, r=1.0, rho=0.5, cylinders=cyls)
        cap = math.exp(sup_v**0.5)
    checks.append(
        CheckResult(
            anchors["moment"],
            f"largest of 20 unit-cylinder moments ({rep.description}; "
            f"max/min ratio {rep.spread:.6g})",
            rep.max_value,
            cap * (1.0 + 1e-9),
        )
    )
    return tuple(checks)


def criterion_theorem1(tol_scale: float = 1.0):
    """Combustion-exp desk run: bounds, plateau, drift, exp moments."""
    grid, spec, traj = _theorem1_run()
    anchors = {"plateau": "thm-main", "drift": "lem-jul2202", "moment": "jul152"}
    checks = _desk_scale_checks(grid, spec, traj, "exp", anchors, tol_scale)
    return CriterionResult(8, "theorem-1-desk-scale", checks)


def criterion_theorem2(tol_scale: float = 1.0):
    """Fractional sub-exponential desk run, same protocol."""
    grid, spec, traj = _theorem2_run()
    anchors = {
        "plateau": "thm-nov24",
        "drift": "prop-feb1402",
        "moment": "jul152-a",
    }
    checks = _desk_scale_checks(grid, spec, traj, "subexp", anchors, tol_scale)
    return CriterionResult(9, "theorem-2-desk-scale", checks)


# ---------------------------------------------------------------------------
# 10. good/bad decomposition
# ---------------------------------------------------------------------------


def criterion_good_bad(tol_scale: float = 1.0):
    """Cone split certified for m = 1..8 on the combustion trajectory."""
    grid, spec, traj = _theorem1_run()
    kappa, eta, n = 2.0, 1.0, grid.n
    checks = []
    for m in range(1, 9):
        gb = good_bad_split(traj, 0, 0, m=float(m), tol=1e-3 * tol_scale)
        for c in gb.checks:
            checks.append(
                CheckResult(
                    f"{c.check_id}-m{m}", c.description, c.value, c.threshold,
                    c.comparison,
                )
            )
        alpha_ref = (eta / kappa) ** (n / 2.0) * math.exp(
            m * m * abs(kappa - eta) / kappa
        )
        beta_ref = 2.0 ** (n / 2.0) * math.exp(-m * m / (8.0 * kappa))
        checks.append(
            CheckResult(
                f"jul2231-m{m}",
                "closed-form mismatch of alpha and beta",
                max(abs(gb.alpha - alpha_ref), abs(gb.beta - beta_ref)),
                1e-12,
            )
        )
    return CriterionResult(10, "good-bad-decomposition", tuple(checks))


# ---------------------------------------------------------------------------
# 11. John-Nirenberg empirics
# ---------------------------------------------------------------------------


def criterion_jn(seed: int = 23, tol_scale: float = 1.0):
    """Exponential tail decay of T(forcing) deviations, both orders."""
    grid = make_grid(1, 20.0, 512)
    dt = 0.005
    n_steps = 1024
    times = dt * np.arange(n_steps + 1)
    T = float(times[-1])
    checks = []
    for s, anchor in ((1.0, "jul2536"), (0.5, "jul2536-a")):
        forcing = random_forcing(
            grid, seed + int(10 * s), amplitude=1.0, modes=4, n_terms=5,
            omega_max=1.0,
        )
        F = SpaceTimeField(grid, 0.0, dt, forcing.sample(times))
        phi = apply_T(F, 1.0, s).phi
        fam = standard_family(grid, T, s=s, t_min=0.0, r_min=1.0)
        worst = cylinder_scan(phi, fam).worst
        res = jn_tail(phi, worst)
        checks.append(
            CheckResult(
                anchor,
                f"fitted tail slope at s = {s} (R^2 = {res.r_squared:.4f}, "
                f"{res.n_fit} levels)",
                res.slope,
                0.0,
            )
        )
        checks.append(
            CheckResult(
                f"{anchor}-fit",
                f"R^2 of the log-linear tail fit at s = {s}",
                res.r_squared,
                0.9 / tol_scale if tol_scale != 0 else 0.9,
                comparison=">=",
            )
        )
    return CriterionResult(11, "john-nirenberg-empirics", tuple(checks))


# ---------------------------------------------------------------------------
# 12. negative control
# ---------------------------------------------------------------------------


def criterion_negative_control(tol_scale: float = 1.0):
    """The validator rejects a bad model; runaway growth is detected."""
    p = compile_rate_expression("u1*v1", 1, 1)
    f2 = compile_rate_expression("2*u1*v1", 1, 1)
    bad = NonlinearitySpec(
        M=1, N=1, p=(p,), f=(f2,),
        A=np.array([[1.0]]), Z=np.array([[1.0]]), C_growth=10.0, rho=1.0,
    )
    report = validate_assumptions(bad)
    dominated_failed = any(
        c.check_id == "sep930_2" and not c.passed for c in report.checks
    )
    rejected = (not report.passed) and dominated_failed

    zero = compile_rate_expression("0", 1, 1)
    expv = compile_rate_expression("exp(v1)", 1, 1)
    runaway = NonlinearitySpec(
        M=1, N=1, p=(zero,), f=(expv,),
        A=np.array([[1.0]]), Z=np.array([[1.0]]), C_growth=1.0, rho=1.0,
    )
    spec = SystemSpec(
        nonlinearity=runaway, eta=[1.0], kappa=[1.0], s=1.0, K1=1.0, K2=1.0
    )
    grid = make_grid(1, 10.0, 64)
    u0 = constant_field(grid, 1.0)
    v0 = constant_field(grid, 0.0)
    blew_up = False
    t_detect = math.inf
    try:
        traj = simulate(spec, grid, u0, v0, T=6.0, dt=1e-3, stride=10)
    except BlowUpError as exc:
        blew_up = True
        traj = exc.partial
        t_detect = exc.t_detect
    times, sups = sup_timeline(traj)
    increasing = bool(np.all(np.diff(sups) > 0.0))

    # Production with no consumption is unbounded; the harness flags it
    # either by the growth of the recorded timeline on [1, 5] or, when the
    # solution escapes to the ceiling before t = 5 (which pure exponential
    # production does), by blow-up detection over a strictly rising
    # timeline.  Both signal the same property.
    if blew_up:
        detected = increasing and t_detect <= 5.0
        how = f"blow-up detected at t = {t_detect:.4g} with rising timeline"
    else:
        window = (times >= 1.0) & (times <= 5.0)
        w_times, w_sups = times[window], sups[window]
        rate = (
            (w_sups[-1] / w_sups[0]) ** (1.0 / (w_times[-1] - w_times[0]))
            if w_sups.size >= 2 and w_sups[0] > 0
            else 0.0
        )
        detected = increasing and rate >= 1.10
        how = f"timeline growth factor {rate:.4g} per unit time on [1, 5]"

    return CriterionResult(
        12,
        "negative-control",
        (
            CheckResult(
                "sep930_2",
                "validator rejects f = 2p with A = [1]",
                1.0 if rejected else 0.0,
                1.0,
                comparison=">=",
            ),
            CheckResult(
                "runaway-detection",
                f"unboundedness flagged without validation ({how})",
                1.0 if detected else 0.0,
                1.0,
                comparison=">=",
            ),
        ),
    )


# ---------------------------------------------------------------------------
# suite driver
# ---------------------------------------------------------------------------


ALL_CRITERIA = (
    criterion_semigroup_exactness,
    criterion_kernel_identities,
    criterion_bound_suite,
    criterion_operator_l2,
    criterion_decomposition,
    criterion_cross_method,
    criterion_hoelder,
    criterion_theorem1,
    criterion_theorem2,
    criterion_good_bad,
    criterion_jn,
    criterion_negative_control,
)


def run_all(tol_scale: float = 1.0):
    """Run the full suite in order; returns one result per criterion."""
    return tuple(fn(tol_scale=tol_scale) for fn in ALL_CRITERIA)
