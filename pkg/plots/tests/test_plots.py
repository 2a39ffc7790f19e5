"""Tests for the CSV-to-figure scripts: determinism, schema policing, and the
reference-line guarantee for the spectrum fixture."""

import csv
import importlib.util
import sys
from pathlib import Path

import pytest

PLOTS_DIR = Path(__file__).resolve().parents[1]
FIXTURES = Path(__file__).resolve().parent / "fixtures"


def load_script(name):
    spec = importlib.util.spec_from_file_location(name, PLOTS_DIR / f"{name}.py")
    module = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(module)
    return module


spectrum = load_script("spectrum")
convergence = load_script("convergence")
flux = load_script("flux")

SCRIPTS = {
    "spectrum": (spectrum, FIXTURES / "spectrum.csv"),
    "convergence": (convergence, FIXTURES / "convergence.csv"),
    "flux": (flux, FIXTURES / "solution.csv"),
}


@pytest.mark.parametrize("name", sorted(SCRIPTS))
def test_scripts_render_deterministically(name, tmp_path):
    module, fixture = SCRIPTS[name]
    first = tmp_path / "first.png"
    second = tmp_path / "second.png"
    module.main([str(fixture), str(first)])
    module.main([str(fixture), str(second)])
    assert first.exists() and first.stat().st_size > 0
    assert first.read_bytes() == second.read_bytes()


def test_spectrum_fixture_below_reference_line(tmp_path):
    with open(FIXTURES / "spectrum.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    values = [float(r["value"]) for r in rows]
    assert values, "fixture must carry data"
    assert max(values) <= 0.2247
    out = tmp_path / "spectrum.png"
    spectrum.main([str(FIXTURES / "spectrum.csv"), str(out)])
    assert out.exists()


@pytest.mark.parametrize("name", sorted(SCRIPTS))
def test_empty_csv_rejected_without_output(name, tmp_path):
    module, _ = SCRIPTS[name]
    empty = tmp_path / "empty.csv"
    empty.write_text("")
    out = tmp_path / "out.png"
    with pytest.raises(SystemExit) as err:
        module.main([str(empty), str(out)])
    assert "empty" in str(err.value)
    assert not out.exists()


def test_schema_mismatch_reports_columns(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("alpha,beta\n1,2\n")
    out = tmp_path / "out.png"
    with pytest.raises(SystemExit) as err:
        spectrum.main([str(bad), str(out)])
    message = str(err.value)
    assert "expected columns" in message and "alpha" in message
    assert not out.exists()


def test_header_only_csv_rejected(tmp_path):
    only_header = tmp_path / "header.csv"
    only_header.write_text("z,scalar_flux\n")
    with pytest.raises(SystemExit, match="no data rows"):
        flux.main([str(only_header), str(tmp_path / "out.png")])


def test_usage_errors():
    with pytest.raises(SystemExit, match="usage"):
        convergence.main(["only-one-arg"])
