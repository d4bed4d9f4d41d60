import hashlib
import json

import pytest

from attachnet.cli import main
from attachnet.errors import InputError
from attachnet.graph_metrics import network_statistics
from attachnet.network import load_network
from attachnet.pipeline import PipelineConfig, config_hash, run_pipeline, tree_digest, write_csv
from attachnet.plotting import plot_size_histogram, plot_sweep
from attachnet.synthetic import generate_corpus
from attachnet.tram_filter import SizeHistogram, SweepPoint

from conftest import FIXTURE


def _config(out, **kw):
    return PipelineConfig(archives=FIXTURE / "archives", out_dir=out, names=FIXTURE / "names.csv",
                          custodians=FIXTURE / "custodians.csv", core_users=FIXTURE / "core_users.txt",
                          knn_users=("alice.adams@corp.example",), **kw)


@pytest.fixture(scope="module")
def pipeline_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("run")
    return out, run_pipeline(_config(out))


def test_all_artifacts_listed_and_digested(pipeline_run):
    out, manifest = pipeline_run
    on_disk = {p.name for p in out.iterdir()} - {"manifest.json"}
    assert set(manifest["artifacts"]) == on_disk
    expected = {"stats.json", "tie_diff.json", "knn.json", "clusters.json", "bags.csv",
                "size_histogram.csv", "size_histogram.png", "sweep_bulk.png", "rank_attachment.csv"}
    assert expected <= on_disk
    assert "link_report.json" not in on_disk
    for rel, digest in manifest["artifacts"].items():
        assert hashlib.sha1((out / rel).read_bytes()).hexdigest() == digest


def test_manifest_records_inputs_and_config(pipeline_run):
    _, manifest = pipeline_run
    assert manifest["inputs"]["archives"] == tree_digest(FIXTURE / "archives")
    assert manifest["config_hash"] == config_hash(manifest["config"])
    assert manifest["config"]["seed"] == 0


def test_stats_round_trip_through_exported_graphml(pipeline_run):
    out, _ = pipeline_run
    stats = json.loads((out / "stats.json").read_text())
    for stem in ("communication", "attachment", "attachment_unfiltered"):
        assert network_statistics(load_network(out / f"{stem}.graphml")).to_dict() == stats[stem]


def test_stats_command_on_pipeline_graphml(pipeline_run, capsys):
    out, _ = pipeline_run
    assert main(["stats", "--network", str(out / "attachment.graphml")]) == 0
    report = json.loads(capsys.readouterr().out)
    stats = json.loads((out / "stats.json").read_text())["attachment"]
    assert {k: report[k] for k in stats} == stats


def test_filtered_network_is_within_unfiltered(pipeline_run):
    out, _ = pipeline_run
    filtered = load_network(out / "attachment.graphml")
    unfiltered = load_network(out / "attachment_unfiltered.graphml")
    assert filtered.nodes <= unfiltered.nodes
    assert all(w <= unfiltered.edges.get(e, 0) for e, w in filtered.edges.items())


def test_knn_and_clusters(pipeline_run):
    out, _ = pipeline_run
    knn = json.loads((out / "knn.json").read_text())
    neighbors = knn["alice.adams@corp.example"]
    assert neighbors[0] == {"user": "alice.adams@corp.example", "distance": 0.0}
    assert len(neighbors) == 6
    clusters = json.loads((out / "clusters.json").read_text())
    n_users = len(clusters["assignment"])
    assert clusters["k"] <= n_users
    ids = sorted(set(clusters["assignment"].values()))
    assert ids == list(range(len(ids)))


def test_seed_leaves_networks_unchanged(pipeline_run, tmp_path):
    out, manifest = pipeline_run
    other = run_pipeline(_config(tmp_path, seed=5, sweeps=False, plots=False))
    assert other["config_hash"] != manifest["config_hash"]
    # the seed only drives k-means; networks differ just in their embedded hash
    body = lambda p: [ln for ln in p.read_text().splitlines() if "config_hash" not in ln]
    assert body(tmp_path / "attachment.csv") == body(out / "attachment.csv")


def test_validate_rejects_missing_paths(tmp_path):
    with pytest.raises(InputError):
        PipelineConfig(archives=tmp_path / "nope", out_dir=tmp_path).validate()
    with pytest.raises(InputError):
        run_pipeline(PipelineConfig(archives=FIXTURE / "archives", out_dir=tmp_path,
                                    names=tmp_path / "missing.csv"))


def test_empty_archive(tmp_path):
    (tmp_path / "empty").mkdir()
    with pytest.raises(InputError, match="no messages found"):
        run_pipeline(PipelineConfig(archives=tmp_path / "empty", out_dir=tmp_path / "out"))


def test_secondary_corpus_is_linked(tmp_path):
    from attachnet.synthetic import generate_link_pair
    paths = generate_link_pair(tmp_path / "pair", n_messages=20)
    manifest = run_pipeline(PipelineConfig(archives=paths["primary"], secondary=paths["attachments"],
                                           out_dir=tmp_path / "out", sweeps=False, plots=False))
    report = json.loads((tmp_path / "out" / "link_report.json").read_text())
    assert "link_report.json" in manifest["artifacts"]
    assert report["match_rate"] >= 0.9


def test_csv_writer_is_self_describing(tmp_path):
    path = write_csv(tmp_path / "t.csv", ("a", "b"), [(1, 1 / 3)], "f" * 40)
    assert path.read_text().splitlines() == ["# attachnet config_hash=" + "f" * 40, "a,b", "1,0.333333333333"]


def test_config_hash_is_order_free():
    assert config_hash({"a": 1, "b": [1, 2]}) == config_hash({"b": [1, 2], "a": 1})
    assert config_hash({"a": 1}) != config_hash({"a": 2})


# -- figures and the generator -------------------------------------------------

def test_plots_are_byte_deterministic(tmp_path):
    points = [SweepPoint(v, 10 / v, 0.5, 10, 5) for v in (1, 2, 5, 10)]
    hist = SizeHistogram((100, 1024), (3, 4, 1))
    for i in range(2):
        plot_sweep(points, "bulk", tmp_path / f"s{i}.png")
        plot_size_histogram(hist, tmp_path / f"h{i}.png")
    assert (tmp_path / "s0.png").read_bytes() == (tmp_path / "s1.png").read_bytes()
    assert (tmp_path / "h0.png").read_bytes() == (tmp_path / "h1.png").read_bytes()
    assert (tmp_path / "s0.png").read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"


def test_synthetic_generator_is_deterministic(tmp_path):
    generate_corpus(tmp_path / "a", 50, 0)
    generate_corpus(tmp_path / "b", 50, 0)
    assert tree_digest(tmp_path / "a") == tree_digest(tmp_path / "b")


def test_bundled_fixture_matches_generator(tmp_path):
    generate_corpus(tmp_path, 50, 0)
    assert tree_digest(tmp_path) == tree_digest(FIXTURE)
