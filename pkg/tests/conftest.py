import pytest

from eplase import SystemParams, standard_params


@pytest.fixture
def ep_params() -> SystemParams:
    return standard_params("ep", eta=18.0)


@pytest.fixture
def ptbp_params() -> SystemParams:
    return standard_params("ptbp", eta=18.0)


@pytest.fixture
def ptsp_params() -> SystemParams:
    return standard_params("ptsp", eta=18.0)


@pytest.fixture
def oracle_params() -> SystemParams:
    # rates scaled down ~1e3 from the benchmark set so the exact density-matrix
    # evolution is tractable; g*sqrt(N)/kappa stays in the bad-cavity regime
    return SystemParams(kappa_a=100.0, kappa_b=10.0, coupling_G=22.5,
                        coupling_g=1.0, atom_count=2,
                        gamma=0.1, eta=0.1, gamma_phi=0.1)
