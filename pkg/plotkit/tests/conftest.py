import subprocess
import sys
from pathlib import Path

import pytest


def _simulate(config, out, extra=()):
    proc = subprocess.run(
        [sys.executable, "-m", "geofeas.cli", "simulate",
         "--config", str(config), "--out", str(out), "--steps", "50", *extra],
        capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    return out


@pytest.fixture(scope="session")
def reference_config():
    import geofeas
    return Path(geofeas.__file__).parent / "presets" / "auv3.cfg"


@pytest.fixture(scope="session")
def run_dir(tmp_path_factory, reference_config):
    """A short slice of the three-vehicle reference run."""
    return _simulate(reference_config, tmp_path_factory.mktemp("runs") / "constrained")


@pytest.fixture(scope="session")
def free_run_dir(tmp_path_factory, reference_config):
    """The same scenario with multipliers forced to zero."""
    return _simulate(reference_config, tmp_path_factory.mktemp("runs") / "free",
                     extra=["--no-constraints"])
