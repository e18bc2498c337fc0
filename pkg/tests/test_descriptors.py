import json

import numpy as np
import pytest

from spatial_lab.algebra import Algebra
from spatial_lab.bimodule import Bimodule
from spatial_lab.config import DEFAULT_TOLERANCES, ExperimentConfig, Tolerances, load_config
from spatial_lab.descriptors import (
    REPORT_HEADER,
    dump_element,
    dump_units,
    load_algebra,
    load_bimodule,
    load_free_units,
    load_kernel,
    load_morphism,
    load_units,
    parse_element,
    read_report,
    write_report,
)
from spatial_lab.errors import DescriptorError
from spatial_lab.tof import TofSystem


def write_json(path, document):
    path.write_text(json.dumps(document, indent=2))
    return path


class TestConfig:
    def test_fixture(self, fixtures_dir):
        config = load_config(fixtures_dir / "suite.json")
        assert config.experiment == "suite"
        assert config.seed == 42
        assert config.inputs["kernel"] == fixtures_dir / "m2_kernel.json"
        assert config.out == fixtures_dir / "../reports/suite.csv"

    def test_defaults(self):
        config = ExperimentConfig()
        assert config.experiment == "suite"
        assert config.tolerances == DEFAULT_TOLERANCES
        assert config.out is None

    def test_tolerance_overrides(self, tmp_path):
        path = write_json(tmp_path / "c.json", {"experiment": "kolmogorov", "tolerances": {"psd": 1e-8}})
        config = load_config(path)
        assert config.tolerances.psd == 1e-8
        assert config.tolerances.generic == DEFAULT_TOLERANCES.generic

    def test_unknown_tolerance(self, tmp_path):
        path = write_json(tmp_path / "c.json", {"tolerances": {"bogus": 1}})
        with pytest.raises(DescriptorError):
            load_config(path)

    def test_unknown_experiment(self, tmp_path):
        path = write_json(tmp_path / "c.json", {"experiment": "nope"})
        with pytest.raises(DescriptorError, match="unknown experiment"):
            load_config(path)

    def test_malformed_json_reports_the_line(self, tmp_path):
        path = tmp_path / "c.json"
        path.write_text('{\n  "experiment": "suite",\n  "seed": ,\n}')
        with pytest.raises(DescriptorError) as excinfo:
            load_config(path)
        assert excinfo.value.line == 3

    def test_missing_file(self, tmp_path):
        with pytest.raises(DescriptorError):
            load_config(tmp_path / "absent.json")

    @pytest.mark.parametrize("bad", [{"psd": 0}, {"generic": -1e-3}])
    def test_tolerances_must_be_positive(self, bad):
        with pytest.raises(ValueError):
            Tolerances(**bad)

    def test_invalid_fields(self):
        with pytest.raises(ValueError):
            ExperimentConfig(h=0)
        with pytest.raises(ValueError):
            ExperimentConfig(seed=-1)


class TestDescriptors:
    def test_algebra(self, tmp_path):
        assert load_algebra(write_json(tmp_path / "a.json", {"blocks": [1, 2]})) == Algebra((1, 2))

    def test_element_roundtrip(self, c_m2, rng):
        b = c_m2.random_element(rng)
        assert parse_element(c_m2, json.loads(json.dumps(dump_element(b)))).close_to(b, 1e-15)

    def test_element_with_wrong_block_count(self, c_m2):
        with pytest.raises(ValueError):
            parse_element(c_m2, [[[1, 0], [0, 1]]])

    def test_action_module(self, tmp_path, m2):
        action = [np.kron(np.eye(2), u).tolist() for u in m2.basis_matrices.real]
        path = write_json(tmp_path / "f.json", {"algebra": [2], "module": {"kind": "action", "free_rank": 2, "action": action}})
        F = load_bimodule(path)
        assert F.free_rank == 2
        assert F.rank == 4

    def test_invalid_action_is_located(self, tmp_path):
        action = [[[1, 0], [0, 1]]] * 4
        path = write_json(tmp_path / "f.json", {"algebra": [2], "module": {"kind": "action", "free_rank": 1, "action": action}})
        with pytest.raises(DescriptorError) as excinfo:
            load_bimodule(path)
        assert excinfo.value.field == "module"
        lines = path.read_text().splitlines()
        assert excinfo.value.line == next(i for i, line in enumerate(lines, start=1) if line.strip().startswith('"module"'))

    def test_kernel_entry_key_must_name_two_labels(self, tmp_path):
        path = write_json(tmp_path / "k.json", {"algebra": [1], "labels": ["a"], "entries": {"a": [[1]]}})
        with pytest.raises(DescriptorError) as excinfo:
            load_kernel(path)
        assert excinfo.value.field == "entries.a"

    def test_kernel_with_missing_entry(self, tmp_path):
        path = write_json(tmp_path / "k.json", {"algebra": [1], "labels": ["a", "b"], "entries": {"a|a": [[1]]}})
        with pytest.raises(DescriptorError):
            load_kernel(path)

    def test_bad_complex_number(self, tmp_path):
        path = write_json(tmp_path / "k.json", {"algebra": [1], "labels": ["a"], "entries": {"a|a": [["one"]]}})
        with pytest.raises(DescriptorError):
            load_kernel(path)

    def test_units(self, fixtures_dir):
        system, units, weights = load_units(fixtures_dir / "trotter_units.json")
        assert set(units) == {"p1", "p2"}
        assert weights == {"p1": 1, "p2": 0}
        assert units["p1"].zeta.components()[0].matrix[0, 1] == 0.2j

    def test_units_roundtrip(self, tmp_path, c_m2, rng):
        system = TofSystem(Bimodule.free(c_m2, 2))
        units = {"x": system.random_unit(rng), "y": system.vacuum()}
        path = tmp_path / "units.json"
        dump_units(units, path)
        _, loaded, weights = load_units(path)
        assert weights == {}
        assert all(loaded[s].distance(units[s]) < 1e-15 for s in units)

    def test_morphism(self, tmp_path, m2):
        system = TofSystem(Bimodule.regular(m2))
        path = write_json(tmp_path / "m.json", {"a": [[1, 0], [0, 1]]})
        gamma = load_morphism(path, system, system)
        assert gamma.fixes_vacuum()

    def test_non_bilinear_morphism(self, tmp_path, m2):
        system = TofSystem(Bimodule.regular(m2))
        path = write_json(tmp_path / "m.json", {"a": [[1, 2], [0, 1]]})
        with pytest.raises(DescriptorError) as excinfo:
            load_morphism(path, system, system)
        assert excinfo.value.field == "a"

    def test_free_units(self, fixtures_dir):
        F, units = load_free_units(fixtures_dir / "free_units.json")
        assert set(units) == {"zeta", "zeta_prime"}
        assert all(u.truncation == 3 for u in units.values())
        assert units["zeta"].terms(3)[0].intervals == ((0.0, 0.5), (0.125, 1.0))


class TestReports:
    def test_write_and_read(self, tmp_path):
        rows = [("Thm6.7", "additive", "1.000000e-14", "1.000000e-12", "true")]
        path = write_report(rows, tmp_path / "out" / "r.csv")
        assert path.read_text().splitlines()[0] == ",".join(REPORT_HEADER)
        assert read_report(path) == [dict(zip(REPORT_HEADER, rows[0]))]

    def test_wrong_header(self, tmp_path):
        path = tmp_path / "r.csv"
        path.write_text("a,b\n1,2\n")
        with pytest.raises(DescriptorError):
            read_report(path)
