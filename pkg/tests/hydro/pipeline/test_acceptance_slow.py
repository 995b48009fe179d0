import pytest

from cprsutils.hydro.config.experiment_spec import load_spec
from cprsutils.hydro.pipeline.experiments import run_experiment
from cprsutils.paths import SPECS_ROOT

pytestmark = pytest.mark.slow


def _run(name, tmp_path, threads=4):
    return run_experiment(load_spec(SPECS_ROOT / name), out_dir=tmp_path, threads=threads)


def test_pde_compare_spec_passes(tmp_path):
    rep = _run("pde_compare.spec", tmp_path, threads=1)
    assert rep.passed, rep.failed()


def test_oracle_spec_passes(tmp_path):
    rep = _run("oracle_check.spec", tmp_path)
    assert len([k for k in rep.assertions if k.startswith("tv_within_max")]) == 18
    assert rep.passed, rep.failed()


def test_coupled_oracle_spec_passes(tmp_path):
    rep = _run("oracle_coupled.spec", tmp_path)
    assert rep.assertions["marginal_fidelity"]
    assert rep.passed, rep.failed()


def test_hydro_converge_spec_passes(tmp_path):
    rep = _run("hydro_converge.spec", tmp_path)
    assert rep.passed, rep.failed()


def test_currents_spec_passes(tmp_path):
    rep = _run("currents_lln.spec", tmp_path)
    assert "martingale_centered[W]" in rep.assertions
    assert rep.passed, rep.failed()


def test_couple_decay_spec_passes(tmp_path):
    rep = _run("couple_decay.spec", tmp_path)
    assert rep.assertions["decreasing_in_N"]
    assert rep.passed, rep.failed()
