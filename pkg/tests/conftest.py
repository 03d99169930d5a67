"""Suite-wide fixtures.

The first fixture below is autouse and replaces the package's network
transport with a tripwire, so the entire suite is guaranteed to run
offline: any code path that tries to reach a provider fails loudly instead
of silently downloading.
"""

import json
from pathlib import Path

import pytest

import oilsvar.ingest as ingest
from oilsvar.identification import RecursiveSVAR
from oilsvar.ingest import PanelConfig, SourceSpec, build_panel

DATA_DIR = Path(__file__).resolve().parent / "data"


def _refuse_network(url, params):
    raise AssertionError(
        f"test suite attempted a network call: {url!r}; inject a fake "
        f"transport instead"
    )


@pytest.fixture(autouse=True)
def no_network(monkeypatch):
    """Nothing in the suite may touch the real network."""
    monkeypatch.setattr(ingest, "default_transport", _refuse_network)
    yield


def fixture_source(vintage, name):
    return SourceSpec(provider="csv", series_id=name,
                      path=f"pkg:fixtures/{vintage}/{name}.csv")


def fixture_panel(vintage):
    config = PanelConfig(
        production=fixture_source(vintage, "production"),
        activity=fixture_source(vintage, "activity"),
        price=fixture_source(vintage, "rac_nominal"),
        cpi=fixture_source(vintage, "cpi"),
    )
    return build_panel(config)


@pytest.fixture(scope="session")
def original_panel():
    return fixture_panel("original")


@pytest.fixture(scope="session")
def updated_panel():
    return fixture_panel("updated")


@pytest.fixture(scope="session")
def original_model(original_panel):
    return RecursiveSVAR(lags=24).fit(original_panel)


@pytest.fixture(scope="session")
def updated_model(updated_panel):
    return RecursiveSVAR(lags=24).fit(updated_panel)


@pytest.fixture(scope="session")
def golden():
    return json.loads((DATA_DIR / "golden.json").read_text(encoding="utf-8"))
