import json
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from fogcast.experiment import ExperimentConfig
from fogcast.synth import SyntheticSiteSpec, synthesize_site, write_site_files

# One line per acceptance criterion, surfaced after the test run so the
# verdicts are visible even though pytest captures stdout.
ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(ACCEPTANCE):
        terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def small_experiment_dir(tmp_path_factory):
    """Two tiny synthetic sites plus a config: cheap enough for unit tests."""
    root = tmp_path_factory.mktemp("smallexp")
    data = root / "data"
    train = synthesize_site(SyntheticSiteSpec(-33.4, -70.8, 400, 7, 0.6), icao="TRNA")
    xfer = synthesize_site(SyntheticSiteSpec(40.0, 115.0, 90, 9, 0.6), icao="XFRA")
    write_site_files(train, data)
    write_site_files(xfer, data)
    doc = {
        "sites": [
            {
                "icao": "TRNA",
                "lat": -33.4,
                "lon": -70.8,
                "elevation": 480.0,
                "metar_path": "data/trna_metar.csv",
                "era5_path": "data/trna_era5.csv",
                "role": "train",
            },
            {
                "icao": "XFRA",
                "lat": 40.0,
                "lon": 115.0,
                "elevation": 50.0,
                "metar_path": "data/xfra_metar.csv",
                "era5_path": "data/xfra_era5.csv",
                "role": "transfer",
            },
        ],
        "train_range": ["2005-01-01", "2005-10-01"],
        "test_range": ["2005-10-01", "2006-02-05"],
        "horizon_h": 2,
        "hyperparams": {"n_estimators": 60},
        "threshold": 0.5,
        "output_dir": "out",
        "seed": 0,
    }
    (root / "exp.json").write_text(json.dumps(doc, indent=2) + "\n")
    return root


@pytest.fixture(scope="session")
def small_config(small_experiment_dir):
    return ExperimentConfig.from_json(small_experiment_dir / "exp.json")
