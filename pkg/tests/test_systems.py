import numpy as np
import pytest

from pyrodiff import (
    NonlinearitySpec,
    SystemSpec,
    builtin_model,
    compile_rate_expression,
    validate_assumptions,
)


def _box_samples(M, N, seed=0, count=64):
    rng = np.random.default_rng(seed)
    return rng.uniform(0.0, 1.0, (M, count)), rng.uniform(0.0, 8.0, (N, count))


# ---------------------------------------------------------------------------
# builtin models
# ---------------------------------------------------------------------------


def test_combustion_exp_builtin():
    spec = builtin_model("combustion-exp(1)")
    assert (spec.M, spec.N) == (1, 1)
    assert spec.s == 1.0
    assert np.allclose(spec.eta, [1.0]) and np.allclose(spec.kappa, [2.0])
    U, V = _box_samples(1, 1)
    nl = spec.nonlinearity
    assert np.allclose(nl.p[0](U, V), U[0] * np.exp(V[0]))
    assert np.array_equal(nl.p[0](U, V), nl.f[0](U, V))
    assert validate_assumptions(nl).passed


def test_combustion_power_builtin():
    spec = builtin_model("combustion-power(2, 1.5)")
    U, V = _box_samples(1, 1, seed=1)
    assert np.allclose(spec.nonlinearity.p[0](U, V), U[0] ** 2 * V[0] ** 1.5)
    assert validate_assumptions(spec.nonlinearity).passed


def test_frac_subexp_builtin():
    spec = builtin_model("frac-subexp(0.5)")
    assert spec.s == 0.5  # fractional diffusion is this model's default
    assert spec.nonlinearity.rho == 0.5
    U, V = _box_samples(1, 1, seed=2)
    assert np.allclose(spec.nonlinearity.p[0](U, V), U[0] * np.exp(V[0] ** 0.5))
    assert validate_assumptions(spec.nonlinearity).passed


def test_multi_species_builtin_extremal_equality():
    spec = builtin_model("multi-species(2, 3)")
    nl = spec.nonlinearity
    assert (nl.M, nl.N) == (2, 3)
    assert np.allclose(nl.A, 0.5)
    U, V = _box_samples(2, 3, seed=3)
    for j in range(3):
        want = sum(nl.A[j, i] * nl.p[i](U, V) for i in range(2))
        assert np.allclose(nl.f[j](U, V), want)
    # equality f_j = sum_i A_ji p_i is the boundary case and must be accepted
    assert validate_assumptions(nl).passed


def test_builtin_model_parameter_overrides():
    spec = builtin_model("combustion-exp(1)", eta=0.5, kappa=[3.0], s=0.75, K1=2.0)
    assert np.allclose(spec.eta, [0.5])
    assert np.allclose(spec.kappa, [3.0])
    assert spec.s == 0.75 and spec.K1 == 2.0
    multi = builtin_model("multi-species(2, 2)", eta=[1.0, 2.0])
    assert np.allclose(multi.eta, [1.0, 2.0])


def test_builtin_model_unknown_name():
    with pytest.raises(ValueError):
        builtin_model("arrhenius(1)")
    with pytest.raises(ValueError):
        builtin_model("COMBUSTION-EXP(1)")


def test_system_spec_validation():
    nl = builtin_model("combustion-exp(1)").nonlinearity
    with pytest.raises(ValueError):
        SystemSpec(nonlinearity=nl, eta=[1.0, 2.0], kappa=[1.0])
    with pytest.raises(ValueError):
        SystemSpec(nonlinearity=nl, eta=[1.0], kappa=[-1.0])
    with pytest.raises(ValueError):
        SystemSpec(nonlinearity=nl, eta=[1.0], kappa=[1.0], s=1.5)
    with pytest.raises(ValueError):
        SystemSpec(nonlinearity=nl, eta=[1.0], kappa=[1.0], K1=0.0)


def test_nonlinearity_spec_validation():
    ok = compile_rate_expression("u1*v1", 1, 1)
    kw = dict(p=(ok,), f=(ok,), A=[[1.0]], Z=[[1.0]])
    NonlinearitySpec(M=1, N=1, **kw)
    with pytest.raises(ValueError):
        NonlinearitySpec(M=2, N=1, **kw)  # rate tuple too short
    with pytest.raises(ValueError):
        NonlinearitySpec(M=1, N=1, p=(ok,), f=(ok,), A=[[1.0, 2.0]], Z=[[1.0]])
    with pytest.raises(ValueError):
        NonlinearitySpec(M=1, N=1, p=(ok,), f=(ok,), A=[[-1.0]], Z=[[1.0]])
    with pytest.raises(ValueError):
        NonlinearitySpec(M=1, N=1, p=(ok,), f=(ok,), A=[[1.0]], Z=[[0.0]])
    with pytest.raises(ValueError):
        NonlinearitySpec(M=1, N=1, **kw, C_growth=0.0)
    with pytest.raises(ValueError):
        NonlinearitySpec(M=1, N=1, **kw, rho=1.5)
    with pytest.raises(ValueError):
        # sub-exponential growth is a single-product statement
        NonlinearitySpec(
            M=1, N=2,
            p=(ok,),
            f=(compile_rate_expression("u1*v1", 1, 2),) * 2,
            A=[[1.0], [1.0]], Z=np.ones((2, 2)), rho=0.5,
        )


# ---------------------------------------------------------------------------
# assumption validator
# ---------------------------------------------------------------------------


def test_validator_rejects_excess_production():
    p = compile_rate_expression("u1*v1", 1, 1)
    f = compile_rate_expression("2*u1*v1", 1, 1)
    bad = NonlinearitySpec(
        M=1, N=1, p=(p,), f=(f,), A=[[1.0]], Z=[[1.0]], C_growth=10.0
    )
    report = validate_assumptions(bad)
    assert not report.passed
    failed = {c.check_id for c in report.checks if not c.passed}
    assert "sep930_2" in failed


def test_validator_report_shape():
    report = validate_assumptions(builtin_model("combustion-exp(1)").nonlinearity)
    ids = {c.check_id for c in report.checks}
    assert {"sep930_1", "sep930_2", "sep930_3"} <= ids
    for c in report.checks:
        assert c.check_id in c.line()
    # deterministic: same spec, same verdicts and margins
    again = validate_assumptions(builtin_model("combustion-exp(1)").nonlinearity)
    assert [(c.violations, c.worst_margin) for c in again.checks] == [
        (c.violations, c.worst_margin) for c in report.checks
    ]


def test_validator_subexponential_checks():
    report = validate_assumptions(builtin_model("frac-subexp(0.5)").nonlinearity)
    assert report.passed
    assert any("feb1406" in c.check_id or "upper" in c.check_id
               for c in report.checks)


# ---------------------------------------------------------------------------
# rate expression sublanguage
# ---------------------------------------------------------------------------


def test_rate_expressions_evaluate():
    U, V = _box_samples(2, 2, seed=5)
    cases = [
        ("u1*v1", U[0] * V[0]),
        ("2*u1 + exp(-v2)", 2 * U[0] + np.exp(-V[1])),
        ("pow(u2, 2)*v1", U[1] ** 2 * V[0]),
        ("u1^2 - v1/4", U[0] ** 2 - V[0] / 4),  # caret means power
        ("u1×v1", U[0] * V[0]),
        ("u1÷2", U[0] / 2),
        ("-u1", -U[0]),
        ("3.5", np.full_like(U[0], 3.5)),
    ]
    for src, want in cases:
        got = compile_rate_expression(src, 2, 2)(U, V)
        assert np.allclose(got, want), src


def test_rate_expression_rejections():
    bad = [
        "__import__('os')",
        "u1.real",
        "u1[0]",
        "u1 if v1 else 0",
        "lambda: 1",
        "w1",
        "u2",  # out of range for M = 1
        "v2",
        "exp(u1, 2, 3) if 0 else 0",
        "sin(u1)",
        "exp(x=u1)",
        "'a'",
        "u1 < v1",
        "u1 @ v1",
        "(u1 for _ in [1])",
    ]
    for src in bad:
        with pytest.raises(ValueError):
            compile_rate_expression(src, 1, 1)


def test_rate_expression_is_sandboxed():
    # the compiled callable must not see builtins
    rate = compile_rate_expression("u1", 1, 1)
    assert rate.__doc__ == "rate expression: u1"
    U = np.array([[1.0, 2.0]])
    V = np.array([[0.0, 0.0]])
    assert np.allclose(rate(U, V), [1.0, 2.0])
