import asyncio
import json

import pytest
from sqlalchemy.orm import sessionmaker

import cli
from crud import run_crud
from database import init_db, make_engine


def report_of(capsys):
    return json.loads(capsys.readouterr().out)["report"]


class TestExitCodes:
    def test_jack_to_stdout(self, capsys):
        """Test a passing command prints its report and exits 0"""
        assert cli.main(["jack", "--lam", "2,1", "--n", "3", "--theta", "1"]) == cli.EXIT_PASS
        document = json.loads(capsys.readouterr().out)
        assert document["metadata"]["command"] == "jack"
        assert document["report"]["passed"] is True
        assert document["report"]["verdict"]
        assert document["report"]["result"]["principal"]["exact"] == "8"

    def test_unknown_flag(self):
        """Test argparse errors exit 1 instead of 2"""
        assert cli.main(["jack", "--bogus"]) == cli.EXIT_ERROR
        assert cli.main([]) == cli.EXIT_ERROR

    def test_invalid_params(self):
        """Test parameters failing validation exit 1"""
        assert cli.main(["jack", "--lam", "1", "--n", "0"]) == cli.EXIT_ERROR
        assert cli.main(["macdonald", "--lam", "1", "--n", "2"]) == cli.EXIT_ERROR

    def test_infeasible_endpoints(self):
        """Test a computation error exits 1"""
        argv = ["exact-dist", "--n", "2", "--T", "1", "--end", "3"]
        assert cli.main(argv) == cli.EXIT_ERROR

    def test_failed_verification(self, capsys):
        """Test a verification that cannot pass exits 2"""
        assert cli.main(["verify-ldp", "--schedule", "3", "--speed", "0.25"]) == cli.EXIT_FAIL
        out = report_of(capsys)
        assert out["passed"] is False
        assert out["result"]["notes"]


class TestConfigFiles:
    def test_config_replaces_flags(self, tmp_path, capsys):
        """Test a JSON run configuration drives the command"""
        path = tmp_path / "run.json"
        path.write_text(json.dumps({
            "version": "1", "command": "jack",
            "params": {"lam": [1, 1], "n": 2, "theta": "1", "b": ["1/2", "1/3"]},
        }))
        assert cli.main(["jack", "--config", str(path)]) == cli.EXIT_PASS
        assert report_of(capsys)["result"]["skew"]["exact"] == "19/36"

    def test_command_mismatch(self, tmp_path):
        """Test a configuration for another command is refused"""
        path = tmp_path / "run.json"
        path.write_text(json.dumps({"version": "1", "command": "rate", "params": {}}))
        assert cli.main(["jack", "--config", str(path)]) == cli.EXIT_ERROR

    def test_unknown_version(self, tmp_path):
        """Test an unsupported configuration version is refused"""
        path = tmp_path / "run.json"
        path.write_text(json.dumps({"version": "0", "command": "rate", "params": {}}))
        assert cli.main(["rate", "--config", str(path)]) == cli.EXIT_ERROR

    def test_hash_ignores_key_order(self):
        """Test equal configurations hash equally"""
        args = cli.build_parser().parse_args(["jack", "--lam", "2", "--n", "2"])
        a = cli.config_from_args(args)
        b = cli.RunConfig.model_validate(json.loads(a.canonical_json()))
        assert a.config_hash() == b.config_hash()


class TestOutputs:
    def test_replay_is_byte_identical(self, tmp_path):
        """Test two runs of one configuration write identical files"""
        names = ("report.json", "config.json", "distribution.csv")
        argv = ["exact-dist", "--n", "2", "--T", "2", "--end", "1,1", "--seed", "5", "--out", str(tmp_path)]
        assert cli.main(argv) == cli.EXIT_PASS
        first = [(tmp_path / name).read_bytes() for name in names]
        assert cli.main(argv) == cli.EXIT_PASS
        assert [(tmp_path / name).read_bytes() for name in names] == first

    def test_csv_format_to_stdout(self, capsys):
        """Test --format csv prints the data table"""
        argv = ["exact-dist", "--n", "2", "--T", "2", "--end", "1,1", "--format", "csv"]
        assert cli.main(argv) == cli.EXIT_PASS
        assert "t,config_key,mass" in capsys.readouterr().out

    def test_forward_sample_seeded(self, capsys):
        """Test the forward sampler replays from its seed"""
        argv = ["sample", "--n", "3", "--T", "4", "--b", "1/2", "--seed", "11"]
        cli.main(argv)
        first = report_of(capsys)["result"]
        cli.main(argv)
        assert report_of(capsys)["result"] == first

    def test_surface_tension(self, capsys):
        """Test slopes are paired and evaluated"""
        argv = ["surface-tension", "--s", "0.5", "--t", "-0.25", "--grad"]
        assert cli.main(argv) == cli.EXIT_PASS
        row = report_of(capsys)["result"]["values"][0]
        assert row["sigma"] == pytest.approx(0.2915609040308188)

    def test_unpaired_slopes(self):
        """Test --s and --t of different lengths are refused"""
        assert cli.main(["surface-tension", "--s", "0.5,0.6", "--t", "-0.25"]) == cli.EXIT_ERROR


class TestRecord:
    def test_record_stores_run(self, monkeypatch, capsys):
        """Test --record writes the run to the registry"""
        engine = make_engine("sqlite:///:memory:")
        Session = sessionmaker(autocommit=False, autoflush=False, bind=engine)
        monkeypatch.setattr(cli, "init_db", lambda: init_db(bind=engine))
        monkeypatch.setattr(cli, "SessionLocal", Session)

        assert cli.main(["jack", "--lam", "1", "--n", "2", "--record"]) == cli.EXIT_PASS
        assert cli.main(["exact-dist", "--n", "2", "--T", "1", "--end", "3", "--record"]) == cli.EXIT_ERROR

        db = Session()
        try:
            runs = asyncio.run(run_crud.get_runs(db))
        finally:
            db.close()
        assert [(r.command, r.status) for r in runs] == [("exact-dist", "error"), ("jack", "passed")]
