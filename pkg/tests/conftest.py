import warnings

import pytest


@pytest.fixture(autouse=True)
def _quiet_wide_well_warnings():
    # The derived desk-scale presets (S, XS) deliberately sit outside the
    # wide-well regime; the advisory warnings are tested explicitly once.
    with warnings.catch_warnings():
        warnings.filterwarnings("ignore", message=".*wide-well regime.*")
        yield
