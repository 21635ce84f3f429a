import os
import subprocess
import sys

import pytest

CLI = [sys.executable, "-m", "pyrodiff.cli"]

QUICK_CFG = """\
model = combustion-exp(1)
kappa = 2.0
grid.n = 1
grid.L = 20.0
grid.N = 64
time.T = 6.0
time.dt = 0.01
init.fuel = bump
init.fuel.value = 1.0
init.product = constant
init.product.value = 0.0
"""

TINY_CFG = """\
model = combustion-exp(1)
grid.N = 32
grid.L = 10.0
time.T = 1.0
time.dt = 0.01
diag.bmo = false
diag.moments = false
diag.decomposition = false
save.fields = false
"""

REJECTED_CFG = """\
model = expression
model.M = 1
model.N = 1
model.p1 = u1*v1
model.f1 = 2*u1*v1
model.growth = 10.0
grid.N = 32
grid.L = 10.0
time.T = 1.0
time.dt = 0.01
"""

RUNAWAY_CFG = """\
model = expression
model.M = 1
model.N = 1
model.p1 = 0
model.f1 = exp(v1)
model.growth = 1.0
eta = 1.0
kappa = 1.0
grid.N = 32
grid.L = 10.0
time.T = 3.0
time.dt = 0.001
init.fuel = constant
init.fuel.value = 1.0
save.fields = false
diag.bmo = false
diag.moments = false
"""


def run_cli(*argv, env=None, cwd=None):
    full_env = os.environ.copy()
    if env:
        full_env.update(env)
    return subprocess.run(
        [*CLI, *argv], capture_output=True, text=True, env=full_env, cwd=cwd
    )


def _write(path, text):
    path.write_text(text)
    return str(path)


@pytest.fixture(scope="module")
def quick_run(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    cfg = _write(root / "quick.cfg", QUICK_CFG)
    out = root / "run1"
    proc = run_cli("simulate", "--config", cfg, "--out", str(out))
    assert proc.returncode == 0, proc.stdout + proc.stderr
    return root, cfg, out


def test_simulate_report_contents(quick_run):
    _, _, out = quick_run
    rows = (out / "checks.csv").read_text().splitlines()
    assert rows[0].startswith("check_id,")
    body = [r.split(",") for r in rows[1:]]
    assert body, "no checks emitted"
    assert all(r[0] for r in body)  # every check names its anchor
    assert all(r[-1] == "true" for r in body)
    ids = {r[0] for r in body}
    assert {"feb704", "sep930_1-positivity", "fuel-monotone",
            "jul2212-u", "jul2212-v", "jul2327"} <= ids
    assert (out / "summary.txt").exists()
    assert (out / "u1.stf").exists() and (out / "v1.stf").exists()


def test_simulate_deterministic(quick_run):
    root, cfg, out = quick_run
    out2 = root / "run2"
    proc = run_cli("simulate", "--config", cfg, "--out", str(out2))
    assert proc.returncode == 0
    for name in ("checks.csv", "summary.txt", "u1.stf", "v1.stf"):
        assert (out / name).read_bytes() == (out2 / name).read_bytes(), name


def test_bmo_report_on_saved_field(quick_run):
    root, _, out = quick_run
    cfg = _write(
        root / "bmo.cfg",
        f"input.field = {out / 'v1.stf'}\nfamily.t_min = 1.0\njn = true\n",
    )
    dest = root / "bmo_out"
    proc = run_cli("bmo-report", "--config", cfg, "--out", str(dest))
    assert proc.returncode == 0, proc.stdout + proc.stderr
    checks = (dest / "checks.csv").read_text()
    assert "lem-jul2202" in checks
    assert "lem-john-nir" in checks
    assert (dest / "bmo_family.csv").exists()
    assert (dest / "jn_tail.csv").exists()


def test_moment_report_on_saved_field(quick_run):
    root, _, out = quick_run
    cfg = _write(
        root / "moment.cfg",
        f"input.field = {out / 'v1.stf'}\nmoment.zbar = 1.0\ncylinders.count = 5\n",
    )
    dest = root / "moment_out"
    proc = run_cli("moment-report", "--config", cfg, "--out", str(dest))
    assert proc.returncode == 0, proc.stdout + proc.stderr
    assert "jul152" in (dest / "checks.csv").read_text()
    moments = (dest / "moments.csv").read_text().splitlines()
    assert len(moments) == 1 + 5


def test_usage_errors_exit_2(tmp_path):
    proc = run_cli("simulate", "--config", str(tmp_path / "absent.cfg"))
    assert proc.returncode == 2
    assert "config error" in proc.stderr.lower()

    cfg = _write(tmp_path / "bad.cfg", TINY_CFG + "bogus.key = 1\n")
    proc = run_cli("simulate", "--config", cfg, "--out", str(tmp_path / "o"))
    assert proc.returncode == 2
    assert "bogus.key" in proc.stderr

    cfg_ok = _write(tmp_path / "ok.cfg", TINY_CFG)
    proc = run_cli(
        "simulate", "--config", cfg_ok, "--tolerance-scale", "0",
        "--out", str(tmp_path / "o2"),
    )
    assert proc.returncode == 2

    proc = run_cli("no-such-command")
    assert proc.returncode == 2


def test_rejected_model_exits_1(tmp_path):
    cfg = _write(tmp_path / "rejected.cfg", REJECTED_CFG)
    proc = run_cli("simulate", "--config", cfg, "--out", str(tmp_path / "out"))
    assert proc.returncode == 1
    assert "sep930_2" in proc.stdout
    assert "[FAIL]" in proc.stdout


def test_blow_up_exits_3(tmp_path):
    cfg = _write(tmp_path / "runaway.cfg", RUNAWAY_CFG)
    proc = run_cli(
        "simulate", "--config", cfg, "--skip-validate",
        "--out", str(tmp_path / "out"),
    )
    assert proc.returncode == 3, proc.stdout + proc.stderr
    assert "blow-up-detected" in proc.stdout
    # the partial record is still reported for post-mortems
    assert (tmp_path / "out" / "checks.csv").exists()


def test_report_dir_env_fallback(tmp_path):
    cfg = _write(tmp_path / "tiny.cfg", TINY_CFG)
    dest = tmp_path / "env_reports"
    proc = run_cli(
        "simulate", "--config", cfg,
        env={"REPORT_DIR": str(dest)}, cwd=str(tmp_path),
    )
    assert proc.returncode == 0, proc.stdout + proc.stderr
    assert (dest / "checks.csv").exists()


def test_verify_kernels_restricted(tmp_path):
    cfg = _write(tmp_path / "k.cfg", "kernels.n = 1\nkernels.s = 1.0\n")
    proc = run_cli("verify-kernels", "--config", cfg, "--out", str(tmp_path / "o"))
    assert proc.returncode == 0, proc.stdout + proc.stderr
    assert "ALL CHECKS PASSED" in proc.stdout


def test_verify_operator(tmp_path):
    proc = run_cli("verify-operator", "--out", str(tmp_path / "o"))
    assert proc.returncode == 0, proc.stdout + proc.stderr
    checks = (tmp_path / "o" / "checks.csv").read_text()
    assert "jul2337" in checks and "feb1426" in checks


def test_full_acceptance_cli(tmp_path):
    proc = run_cli("full-acceptance", "--out", str(tmp_path / "acc"))
    assert proc.returncode == 0, proc.stdout + proc.stderr
    assert "12/12 criteria passed" in proc.stdout
    assert (tmp_path / "acc" / "checks.csv").exists()
