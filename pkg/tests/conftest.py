import pytest

from awpi import load_scenario, simulate


def _run(name):
    cfg = load_scenario(name)
    return cfg, simulate(cfg.params, cfg.signal, cfg.method, cfg)


@pytest.fixture(scope="session")
def epm_run():
    return _run("paper_sec5_epm")


@pytest.fixture(scope="session")
def elm_run():
    return _run("paper_sec5_elm")


@pytest.fixture(scope="session")
def itm_run():
    return _run("paper_sec5_itm")


@pytest.fixture(scope="session")
def ramp_cfg():
    return load_scenario("ramp_reference")
