import json

import pytest

from anisowalk import ManifestError
from anisowalk.engine.pool import derive_seed, replica_tasks, run_blocks, split_replicas
from anisowalk.engine.reports import RunManifest, config_hash, dumps, export_run, make_report, write_report


def test_derive_seed_frozen():
    assert derive_seed(1, "endpoint", 0) == derive_seed(1, "endpoint", 0)
    assert derive_seed(1, "endpoint", 0) != derive_seed(1, "endpoint", 1)
    assert derive_seed(1, "endpoint", 0) != derive_seed(2, "endpoint", 0)
    assert 0 <= derive_seed(5, "x", 3) < 2 ** 64


def test_split_replicas():
    assert split_replicas(25, 10) == [(0, 10), (1, 10), (2, 5)]
    assert split_replicas(0, 10) == []
    with pytest.raises(ValueError):
        split_replicas(5, 0)
    assert sum(c for _, c in replica_tasks(3, "t", 1234, 100)) == 1234


def _square(x):
    return x * x


def test_run_blocks_order():
    assert run_blocks(_square, range(6), workers=3) == [0, 1, 4, 9, 16, 25]


def test_hash_ignores_volatile_keys():
    a = {"master_seed": 1, "workers": 1, "paths": {"output_dir": "a"}}
    b = {"master_seed": 1, "workers": 8, "paths": {"output_dir": "b"}}
    assert config_hash(a) == config_hash(b)
    assert config_hash(a) != config_hash(dict(a, master_seed=2))


def test_report_files(tmp_path):
    report = make_report("coupling", {"N": 4}, {"slope": 0.5}, 0.85, True,
                         points=[(1.0, 2.0), (2.0, 3.0)], fit={"slope": 0.5, "intercept": 0.0, "r_squared": 1.0})
    paths = write_report(report, tmp_path)
    assert [p.name for p in paths] == ["report_coupling.json", "fit_coupling.csv"]
    assert json.loads(paths[0].read_text()) == json.loads(dumps(report))


def test_manifest_errors(tmp_path):
    with pytest.raises(ManifestError):
        RunManifest.load(tmp_path)
    (tmp_path / "manifest.json").write_text("{not json")
    with pytest.raises(ManifestError):
        export_run(tmp_path, "json")
