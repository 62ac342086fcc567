import json
from fractions import Fraction

import numpy as np
import pytest

from models.lattice import HeightField, ParticleConfig
from utils.io import (
    distribution_csv,
    dumps_report,
    ensemble_jsonl,
    file_hashes,
    height_csv,
    read_height_csv,
    run_metadata,
    to_jsonable,
    write_text,
)
from walks.lattice import canonical_path
from walks.sampler import exact_distribution

Y = ParticleConfig(positions=(0, -1), theta=1)
Z = ParticleConfig(positions=(1, 0), theta=1)


def meta():
    return run_metadata("exact-dist", "abc", 7)


class TestJsonable:
    def test_scalars(self):
        """Test Fractions, numpy values and complex numbers become JSON types"""
        out = to_jsonable({"f": Fraction(1, 3), "a": np.arange(3), "g": np.float64(0.5), "z": 1 - 2j})
        assert out == {"f": "1/3", "a": [0, 1, 2], "g": 0.5, "z": {"real": 1.0, "imag": -2.0}}
        json.dumps(out)

    def test_non_finite(self):
        """Test infinities are written as strings"""
        assert to_jsonable([float("-inf")]) == ["-inf"]

    def test_models(self):
        """Test pydantic models are dumped recursively"""
        out = to_jsonable(ParticleConfig(positions=(0, "-1/2"), theta="1/2"))
        assert out["positions"] == ["0", "-1/2"]


class TestMetadata:
    def test_no_timestamp(self):
        """Test the header is fixed by the configuration alone"""
        m = meta()
        assert m["command"] == "exact-dist"
        assert m["seed"] == 7
        assert not any("time" in k or "date" in k for k in m)

    def test_report_is_stable(self):
        """Test two dumps of the same report are identical"""
        assert dumps_report({"x": Fraction(1, 2)}, meta()) == dumps_report({"x": Fraction(1, 2)}, meta())


class TestTables:
    def test_distribution_csv(self):
        """Test the marginal table has a header block and exact masses"""
        text = distribution_csv(exact_distribution(Y, Z, 2), meta())
        lines = text.splitlines()
        comments = [l for l in lines if l.startswith("#")]
        assert len(comments) == len(meta())
        rows = [l for l in lines if not l.startswith("#")]
        assert rows[0] == "t,config_key,mass"
        assert rows[1].startswith("0,") and rows[1].endswith(",1")

    def test_ensemble_jsonl(self):
        """Test one metadata line then one line per time step"""
        walk = canonical_path(Y, Z, 2)
        lines = ensemble_jsonl([walk], meta()).splitlines()
        assert json.loads(lines[0])["metadata"]["config_hash"] == "abc"
        assert len(lines) == 4
        assert json.loads(lines[-1]) == {"sample": 0, "t": 2, "positions": ["1", "0"]}

    def test_height_csv_reads_back(self, tmp_path):
        """Test a written height field is read back onto the same grid"""
        grid = np.array([[0.0, 0.0], [0.5, 0.25], [1.0, 1.0]])
        H = HeightField(grid=grid, x_min=-1.0, dx=0.5, dt=0.5, theta=1.0, t_horizon=0.5)
        path = tmp_path / "field.csv"
        write_text(path, height_csv(H, meta()))
        back = read_height_csv(path, theta=1.0)
        assert back.x_min == pytest.approx(-1.0)
        assert back.dx == pytest.approx(0.5)
        assert np.allclose(back.grid, grid)

    def test_empty_csv(self, tmp_path):
        """Test a file with only comments is rejected"""
        path = tmp_path / "empty.csv"
        path.write_text("# command=rate\nx,t,H\n")
        with pytest.raises(ValueError):
            read_height_csv(path, theta=1.0)


class TestWriteText:
    def test_hash_matches_file(self, tmp_path):
        """Test the returned digest is the digest of the written bytes"""
        path = tmp_path / "nested" / "report.json"
        digest = write_text(path, "hello\n")
        assert file_hashes([path]) == [digest]

    def test_no_path(self):
        """Test a missing path writes nothing"""
        assert write_text(None, "x") is None
