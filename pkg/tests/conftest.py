import pathlib

import pytest

import geofeas

PRESET_DIR = pathlib.Path(geofeas.__file__).parent / "presets"


@pytest.fixture(autouse=True)
def clean_backend_env(monkeypatch):
    # keep backend resolution deterministic regardless of the caller's shell
    monkeypatch.delenv("GEOFEAS_BACKEND", raising=False)


@pytest.fixture
def preset_dir():
    return PRESET_DIR
