import numpy as np
import pytest

from quadls.dataio import load_wdbc, write_wdbc_csv


@pytest.fixture(scope="session")
def wdbc_path(tmp_path_factory):
    """Materialize the 569-row diagnostic breast-cancer table as a UCI-format CSV."""
    from sklearn.datasets import load_breast_cancer

    bundle = load_breast_cancer()
    letters = ["M" if t == 0 else "B" for t in bundle.target]
    path = tmp_path_factory.mktemp("data") / "wdbc.data"
    write_wdbc_csv(path, bundle.data, letters)
    return path


@pytest.fixture(scope="session")
def wdbc(wdbc_path):
    return load_wdbc(wdbc_path, seed=0)
