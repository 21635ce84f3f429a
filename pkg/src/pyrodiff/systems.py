"""Reaction system specifications and structural assumption checks.

A system couples M consumed species (fuels) u_1..u_M at diffusivities
eta_i with N produced species (products) v_1..v_N at diffusivities
kappa_j:

    du_i/dt = -eta_i*(-Lap)^s u_i - p_i(U, V)
    dv_j/dt = -kappa_j*(-Lap)^s v_j + f_j(U, V)

The structural assumptions that the diagnostics chain rests on are checked
numerically by ``validate_assumptions`` on quasi-random samples of a state
box plus its coordinate faces:

* ``sep930_1``  f_j >= 0 on {v_j = 0} and p_i = 0 on {u_i = 0}
* ``sep930_3``  p_i >= 0 everywhere
* ``sep930_2``  f_j <= sum_i A_ji p_i
* ``feb1110``   0 <= f_j <= C * exp(Z_j . V)          (rho = 1)
* ``upperbounds`` 0 <= f_j <= C * exp(C * v^rho)      (rho < 1, N = 1)
* ``feb1406``   f_1 <= C * p_1                        (rho < 1, M = N = 1)

Rate functions take stacked states (U, V) with U of shape (M, ...) and V
of shape (N, ...) and return one array per component.
"""

from __future__ import annotations

import ast
import re
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import qmc

__all__ = [
    "NonlinearitySpec",
    "SystemSpec",
    "AssumptionCheck",
    "AssumptionReport",
    "validate_assumptions",
    "builtin_model",
    "compile_rate_expression",
    "BUILTIN_MODELS",
]


@dataclass(frozen=True)
class NonlinearitySpec:
    """Rate functions and the constants entering the growth assumptions."""

    M: int
    N: int
    p: tuple  # M callables (U, V) -> array
    f: tuple  # N callables (U, V) -> array
    A: np.ndarray = field(repr=False)  # (N, M), nonnegative
    Z: np.ndarray = field(repr=False)  # (N, N) rows Z_j, positive
    C_growth: float = 1.0
    rho: float = 1.0

    def __post_init__(self):
        if self.M < 1 or self.N < 1:
            raise ValueError("M and N must be >= 1")
        if len(self.p) != self.M or len(self.f) != self.N:
            raise ValueError("rate tuple lengths must match M and N")
        A = np.asarray(self.A, dtype=float)
        Z = np.asarray(self.Z, dtype=float)
        if A.shape != (self.N, self.M):
            raise ValueError(f"A must have shape ({self.N}, {self.M})")
        if Z.shape != (self.N, self.N):
            raise ValueError(f"Z must have shape ({self.N}, {self.N})")
        if np.any(A < 0):
            raise ValueError("A must be nonnegative")
        if np.any(Z <= 0):
            raise ValueError("Z must have positive entries")
        if not self.C_growth > 0:
            raise ValueError("C_growth must be > 0")
        if not 0.0 < self.rho <= 1.0:
            raise ValueError(f"rho must lie in (0, 1], got {self.rho}")
        if self.rho < 1.0 and self.N != 1:
            raise ValueError("sub-exponential growth (rho < 1) requires N = 1")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "Z", Z)


@dataclass(frozen=True)
class SystemSpec:
    """A nonlinearity plus diffusivities, diffusion order and data ceilings."""

    nonlinearity: NonlinearitySpec
    eta: np.ndarray = field(repr=False)  # (M,) fuel diffusivities, > 0
    kappa: np.ndarray = field(repr=False)  # (N,) product diffusivities, > 0
    s: float = 1.0
    K1: float = 1.0  # sup bound on initial fuels
    K2: float = 1.0  # sup bound on initial products

    def __post_init__(self):
        eta = np.atleast_1d(np.asarray(self.eta, dtype=float))
        kappa = np.atleast_1d(np.asarray(self.kappa, dtype=float))
        if eta.shape != (self.nonlinearity.M,):
            raise ValueError(f"eta must have {self.nonlinearity.M} entries")
        if kappa.shape != (self.nonlinearity.N,):
            raise ValueError(f"kappa must have {self.nonlinearity.N} entries")
        if np.any(eta <= 0) or np.any(kappa <= 0):
            raise ValueError("nonpositive diffusivity")
        if not 0.0 < self.s <= 1.0:
            raise ValueError(f"invalid order: s must lie in (0, 1], got {self.s}")
        if not (self.K1 > 0 and self.K2 >= 0):
            raise ValueError("K1 must be > 0 and K2 >= 0")
        object.__setattr__(self, "eta", eta)
        object.__setattr__(self, "kappa", kappa)

    @property
    def M(self) -> int:
        return self.nonlinearity.M

    @property
    def N(self) -> int:
        return self.nonlinearity.N


# ---------------------------------------------------------------------------
# assumption validation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AssumptionCheck:
    check_id: str
    description: str
    samples: int
    violations: int
    worst_margin: float  # most negative slack observed (>= 0 means clean)

    @property
    def passed(self) -> bool:
        return self.violations == 0

    def line(self) -> str:
        state = "PASS" if self.passed else "FAIL"
        return (
            f"[{state}] {self.check_id}: {self.description}; samples = "
            f"{self.samples}, violations = {self.violations}, "
            f"worst margin = {self.worst_margin:.3g}"
        )


@dataclass(frozen=True)
class AssumptionReport:
    checks: tuple

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def lines(self):
        return [c.line() for c in self.checks]


_EQ_TOL = 1e-10  # slack for inequalities evaluated in floating point


def _sample_box(u_hi, v_hi, M, N, count, seed):
    """Sobol samples of the box [0, u_hi]^M x [0, v_hi]^N."""
    sampler = qmc.Sobol(d=M + N, scramble=True, seed=seed)
    raw = sampler.random(count)
    U = (raw[:, :M] * np.asarray(u_hi)).T
    V = (raw[:, M:] * np.asarray(v_hi)).T
    return U, V


def validate_assumptions(
    spec: NonlinearitySpec,
    u_hi=1.0,
    v_hi=20.0,
    sample_count: int = 4096,
    seed: int = 0,
) -> AssumptionReport:
    """Check the structural assumptions on quasi-random box samples.

    ``u_hi``/``v_hi`` give the box [0, u_hi]^M x [0, v_hi]^N (scalars or
    per-component arrays).  Boundary faces u_i = 0 and v_j = 0 are sampled
    with the same budget.  ``sample_count`` must be at least 1000.
    """
    if sample_count < 1000:
        raise ValueError("sample_count must be >= 1000")
    u_hi = np.broadcast_to(np.asarray(u_hi, dtype=float), (spec.M,)).copy()
    v_hi = np.broadcast_to(np.asarray(v_hi, dtype=float), (spec.N,)).copy()
    if np.any(u_hi <= 0) or np.any(v_hi <= 0):
        raise ValueError("empty domain: box bounds must be positive")
    U, V = _sample_box(u_hi, v_hi, spec.M, spec.N, sample_count, seed)

    P = np.stack([np.asarray(p(U, V), dtype=float) for p in spec.p])
    F = np.stack([np.asarray(f(U, V), dtype=float) for f in spec.f])
    scale_p = max(1.0, float(np.abs(P).max()))
    scale_f = max(1.0, float(np.abs(F).max()))
    checks = []

    def record(check_id, description, margins, scale=1.0):
        margins = np.asarray(margins, dtype=float)
        bad = int(np.sum(margins < -_EQ_TOL * scale))
        checks.append(
            AssumptionCheck(
                check_id=check_id,
                description=description,
                samples=int(margins.size),
                violations=bad,
                worst_margin=float(margins.min()) if margins.size else 0.0,
            )
        )

    # faces: f_j >= 0 on {v_j = 0}; p_i = 0 on {u_i = 0}
    face_margins_f = []
    for j in range(spec.N):
        Vj = V.copy()
        Vj[j] = 0.0
        face_margins_f.append(np.asarray(spec.f[j](U, Vj), dtype=float))
    record(
        "sep930_1",
        "f_j >= 0 on the face v_j = 0",
        np.concatenate([m.ravel() for m in face_margins_f]),
        scale_f,
    )
    face_margins_p = []
    for i in range(spec.M):
        Ui = U.copy()
        Ui[i] = 0.0
        pi = np.asarray(spec.p[i](Ui, V), dtype=float)
        face_margins_p.append(-np.abs(pi))  # equality: |p_i| must vanish
    record(
        "sep930_1-consumption",
        "p_i = 0 on the face u_i = 0",
        np.concatenate([m.ravel() for m in face_margins_p]),
        scale_p,
    )

    record("sep930_3", "p_i >= 0 on the box", P.ravel(), scale_p)
    record("feb1110-lower", "f_j >= 0 on the box", F.ravel(), scale_f)

    dominated = np.tensordot(spec.A, P, axes=(1, 0))  # (N, samples)
    record(
        "sep930_2",
        "f_j <= sum_i A_ji p_i",
        (dominated - F).ravel(),
        max(scale_f, scale_p),
    )

    if spec.rho == 1.0:
        growth = spec.C_growth * np.exp(np.tensordot(spec.Z, V, axes=(1, 0)))
        record(
            "feb1110",
            "f_j <= C * exp(Z_j . V)",
            (growth - F).ravel(),
            float(np.abs(growth).max()),
        )
    else:
        growth = spec.C_growth * np.exp(spec.C_growth * V[0] ** spec.rho)
        record(
            "upperbounds",
            "f <= C * exp(C * v^rho)",
            (growth - F[0]).ravel(),
            float(np.abs(growth).max()),
        )
        if spec.M == 1:
            record(
                "feb1406",
                "f <= C * p (production dominated by consumption)",
                (spec.C_growth * P[0] - F[0]).ravel(),
                max(scale_f, scale_p),
            )

    return AssumptionReport(checks=tuple(checks))


# ---------------------------------------------------------------------------
# builtin models
# ---------------------------------------------------------------------------


def _power_exp_sup(beta: float) -> float:
    """sup_{v >= 0} v^beta * exp(-v) = (beta/e)^beta."""
    return (beta / np.e) ** beta if beta > 0 else 1.0


def _combustion_power(m: float, beta: float, K1: float) -> NonlinearitySpec:
    def rate(U, V):
        return U[0] ** m * V[0] ** beta

    C = 1.05 * max(K1, 1.0) ** m * _power_exp_sup(beta)
    return NonlinearitySpec(
        M=1, N=1, p=(rate,), f=(rate,),
        A=np.array([[1.0]]), Z=np.array([[1.0]]), C_growth=C, rho=1.0,
    )


def _combustion_exp(m: float, K1: float) -> NonlinearitySpec:
    def rate(U, V):
        return U[0] ** m * np.exp(V[0])

    C = 1.05 * max(K1, 1.0) ** m
    return NonlinearitySpec(
        M=1, N=1, p=(rate,), f=(rate,),
        A=np.array([[1.0]]), Z=np.array([[1.0]]), C_growth=C, rho=1.0,
    )


def _frac_subexp(rho: float, K1: float) -> NonlinearitySpec:
    def rate(U, V):
        return U[0] * np.exp(np.maximum(V[0], 0.0) ** rho)

    C = 1.05 * max(K1, 1.0)
    return NonlinearitySpec(
        M=1, N=1, p=(rate,), f=(rate,),
        A=np.array([[1.0]]), Z=np.array([[1.0]]), C_growth=C, rho=rho,
    )


def _multi_species(M: int, N: int, K1: float) -> NonlinearitySpec:
    # f_j = sum_i A_ji p_i exactly: the extremal equality case of sep930_2
    A = np.full((N, M), 1.0 / M)

    def make_p(i):
        def p(U, V):
            return U[i] * np.sum(V, axis=0)

        return p

    def make_f(j):
        def f(U, V):
            return np.sum(V, axis=0) * sum(A[j, i] * U[i] for i in range(M))

        return f

    C = 1.05 * max(K1, 1.0)
    return NonlinearitySpec(
        M=M, N=N,
        p=tuple(make_p(i) for i in range(M)),
        f=tuple(make_f(j) for j in range(N)),
        A=A, Z=np.ones((N, N)), C_growth=C, rho=1.0,
    )


BUILTIN_MODELS = {
    "combustion-power": ("m", "beta"),
    "combustion-exp": ("m",),
    "frac-subexp": ("rho",),
    "multi-species": ("M", "N"),
}

_NAME_RE = re.compile(r"^\s*([a-z-]+)\s*(?:\(([^)]*)\))?\s*$")


def builtin_model(
    name: str,
    eta=None,
    kappa=None,
    s: float | None = None,
    K1: float = 1.0,
    K2: float = 1.0,
) -> SystemSpec:
    """Construct a named builtin system, e.g. ``combustion-exp(1)``.

    Defaults: fuel diffusivity 1, product diffusivity 2, classical
    diffusion (s = 1) except ``frac-subexp`` which defaults to s = 1/2.
    """
    match = _NAME_RE.match(name)
    if not match:
        raise ValueError(f"unknown model: cannot parse {name!r}")
    base, argstr = match.group(1), match.group(2)
    args = [float(a) for a in argstr.split(",")] if argstr else []

    if base == "combustion-power":
        m, beta = (args + [1.0, 1.0])[:2]
        nl = _combustion_power(m, beta, K1)
        s_default = 1.0
    elif base == "combustion-exp":
        m = args[0] if args else 1.0
        nl = _combustion_exp(m, K1)
        s_default = 1.0
    elif base == "frac-subexp":
        rho = args[0] if args else 0.5
        nl = _frac_subexp(rho, K1)
        s_default = 0.5
    elif base == "multi-species":
        M, N = (int(a) for a in (args + [2, 2])[:2])
        nl = _multi_species(M, N, K1)
        s_default = 1.0
    else:
        raise ValueError(f"unknown model: {base!r}")

    eta = np.full(nl.M, 1.0) if eta is None else np.broadcast_to(
        np.asarray(eta, dtype=float), (nl.M,)
    )
    kappa = np.full(nl.N, 2.0) if kappa is None else np.broadcast_to(
        np.asarray(kappa, dtype=float), (nl.N,)
    )
    return SystemSpec(
        nonlinearity=nl,
        eta=np.array(eta),
        kappa=np.array(kappa),
        s=s_default if s is None else s,
        K1=K1,
        K2=K2,
    )


# ---------------------------------------------------------------------------
# user-defined rates: a tiny arithmetic expression sublanguage
# ---------------------------------------------------------------------------

_ALLOWED_BINOPS = (ast.Add, ast.Sub, ast.Mult, ast.Div, ast.Pow)
_ALLOWED_CALLS = ("exp", "pow")


def compile_rate_expression(src: str, M: int, N: int):
    """Compile an arithmetic expression in u1..uM, v1..vN to a rate callable.

    Grammar: + - * / (also the symbols for multiplication and division),
    exp(.), pow(., .), numeric literals, and the state variables.  Parsed
    once at config load; anything outside the whitelist is rejected.
    """
    text = src.replace("×", "*").replace("÷", "/").replace("^", "**")
    try:
        tree = ast.parse(text, mode="eval")
    except SyntaxError as exc:
        raise ValueError(f"bad rate expression {src!r}: {exc}") from None

    names = {f"u{i + 1}": ("u", i) for i in range(M)}
    names.update({f"v{j + 1}": ("v", j) for j in range(N)})

    def check(node):
        if isinstance(node, ast.Expression):
            check(node.body)
        elif isinstance(node, ast.BinOp) and isinstance(node.op, _ALLOWED_BINOPS):
            check(node.left)
            check(node.right)
        elif isinstance(node, ast.UnaryOp) and isinstance(
            node.op, (ast.USub, ast.UAdd)
        ):
            check(node.operand)
        elif isinstance(node, ast.Call):
            if (
                not isinstance(node.func, ast.Name)
                or node.func.id not in _ALLOWED_CALLS
                or node.keywords
            ):
                raise ValueError(
                    f"bad rate expression {src!r}: only exp() and pow() calls allowed"
                )
            for arg in node.args:
                check(arg)
        elif isinstance(node, ast.Constant):
            if not isinstance(node.value, (int, float)):
                raise ValueError(f"bad rate expression {src!r}: non-numeric constant")
        elif isinstance(node, ast.Name):
            if node.id not in names:
                raise ValueError(
                    f"bad rate expression {src!r}: unknown variable {node.id!r}"
                )
        else:
            raise ValueError(
                f"bad rate expression {src!r}: disallowed construct "
                f"{type(node).__name__}"
            )

    check(tree)
    code = compile(tree, "<rate>", "eval")

    def rate(U, V):
        env = {f"u{i + 1}": U[i] for i in range(M)}
        env.update({f"v{j + 1}": V[j] for j in range(N)})
        env["exp"] = np.exp
        env["pow"] = np.power
        return eval(code, {"__builtins__": {}}, env)

    rate.__doc__ = f"rate expression: {src}"
    return rate
