import csv
import json
import subprocess
import sys

import pytest

from attachnet.cli import main, parse_args, settings_of
from attachnet.graph_metrics import network_statistics
from attachnet.network import load_network

from conftest import FIXTURE

ARCHIVES = str(FIXTURE / "archives")
FIXTURE_ARGS = ["--archives", ARCHIVES, "--names", str(FIXTURE / "names.csv"),
                "--custodians", str(FIXTURE / "custodians.csv"),
                "--core-users", str(FIXTURE / "core_users.txt")]


def run(*argv):
    return main([str(a) for a in argv])


@pytest.fixture(scope="module")
def extracted(tmp_path_factory):
    out = tmp_path_factory.mktemp("extract")
    assert run("extract", *FIXTURE_ARGS, "--out-dir", out) == 0
    return out


def _body(path):
    """File contents without the config-hash line."""
    return [line for line in path.read_text().splitlines() if "config_hash" not in line]


# -- exit codes ----------------------------------------------------------------

def test_extract_on_empty_archive(tmp_path, capsys):
    (tmp_path / "empty").mkdir()
    assert run("extract", "--archives", tmp_path / "empty", "--out-dir", tmp_path / "o") == 2
    err = capsys.readouterr().err
    assert "no messages found" in err and len(err.strip().splitlines()) == 1


@pytest.mark.parametrize("argv", [
    [],
    ["frobnicate"],
    ["stats"],
    ["filter-sweep", "--index", "x.json", "--parameter", "bulk", "--values", "a,b", "--out", "s.csv"],
    ["extract", "--archives", ARCHIVES, "--out-dir", "o", "--pair-scope", "pair"],
])
def test_usage_errors(argv, capsys):
    assert main(argv) == 1
    assert capsys.readouterr().err.strip()


def test_missing_input_file(tmp_path):
    assert run("stats", "--network", tmp_path / "absent.graphml") == 2


def test_analysis_error_for_too_many_clusters(extracted, capsys):
    assert run("cluster", "--index", extracted / "index.json", "-k", "1000") == 3
    assert "exceeds" in capsys.readouterr().err


def test_unknown_knn_user(extracted):
    assert run("knn", "--index", extracted / "index.json", "--user", "nobody@corp.example") == 2


def test_non_ascending_sweep(extracted, tmp_path):
    assert run("filter-sweep", "--index", extracted / "index.json", "--parameter", "bulk",
               "--values", "5,1", "--out", tmp_path / "s.csv") == 1


def test_version(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0
    assert capsys.readouterr().out.startswith("attachnet ")


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "attachnet", "stats"], capture_output=True, text=True)
    assert proc.returncode == 1


# -- extract and analysis commands ---------------------------------------------

def test_extract_writes_both_networks(extracted):
    for stem in ("communication", "attachment", "attachment_unfiltered"):
        for suffix in (".graphml", ".csv", ".json"):
            assert (extracted / f"{stem}{suffix}").is_file()
    manifest = json.loads((extracted / "manifest.json").read_text())
    assert set(manifest["artifacts"]) >= {"index.json", "attachment.graphml", "communication.graphml"}
    core = set((FIXTURE / "core_users.txt").read_text().split())
    assert load_network(extracted / "communication.graphml").nodes <= core


def test_stats_matches_in_memory(extracted, capsys):
    assert run("stats", "--network", extracted / "attachment.graphml") == 0
    report = json.loads(capsys.readouterr().out)
    expected = network_statistics(load_network(extracted / "attachment.json")).to_dict()
    assert {k: report[k] for k in expected} == expected
    assert len(report["config_hash"]) == 40


def test_centrality_top(extracted, capsys):
    assert run("centrality", "--network", extracted / "attachment.graphml", "--measure", "degree",
               "--top", "3") == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0].startswith("# attachnet config_hash=")
    rows = list(csv.DictReader(lines[1:]))
    assert [r["rank"] for r in rows] == ["1", "2", "3"]
    assert {r["measure"] for r in rows} == {"degree"}


def test_rank_and_json_output(extracted, tmp_path):
    assert run("rank", "--network", extracted / "communication.csv", "--limit", "5",
               "--out", tmp_path / "rank.json") == 0
    data = json.loads((tmp_path / "rank.json").read_text())
    assert data["columns"][:2] == ["overall_rank", "user"]
    assert len(data["rows"]) == 5
    values = [r[2] for r in data["rows"]]
    assert values == sorted(values, reverse=True)


def test_diff_counts(extracted, capsys):
    assert run("diff", "--network", extracted / "attachment.graphml",
               "--against", extracted / "communication.graphml", "--index", extracted / "index.json") == 0
    diff = json.loads(capsys.readouterr().out)
    attach = load_network(extracted / "attachment.graphml")
    comm = load_network(extracted / "communication.graphml")
    assert diff["counts"]["gained"] == len(set(attach.edges) - set(comm.edges))
    assert diff["counts"]["lost"] == len(set(comm.edges) - set(attach.edges))


def test_knn_and_cluster(extracted, tmp_path, capsys):
    index = extracted / "index.json"
    assert run("knn", "--index", index, "--user", "Alice.Adams@corp.example", "-k", "3") == 0
    knn = json.loads(capsys.readouterr().out)
    assert knn["neighbors"][0] == {"user": "alice.adams@corp.example", "distance": 0.0}
    assert len(knn["neighbors"]) == 3
    assert run("cluster", "--index", index, "-k", "3", "--seed", "1", "--out", tmp_path / "c.json") == 0
    clusters = json.loads((tmp_path / "c.json").read_text())
    assert clusters["k"] == 3 and clusters["seed"] == 1


def test_filter_sweep_outputs(extracted, tmp_path):
    out = tmp_path / "sweep.csv"
    assert run("filter-sweep", "--index", extracted / "index.json", "--parameter", "event_freq",
               "--values", "1,2,5", "--out", out, "--histogram", tmp_path / "hist.csv") == 0
    rows = list(csv.reader(out.read_text().splitlines()[1:]))
    assert rows[0] == ["value", "avg_degree", "avg_clustering"] and len(rows) == 4
    assert out.with_suffix(".png").is_file() and (tmp_path / "hist.png").is_file()


def test_export_conversions(extracted, tmp_path):
    assert run("export", "--network", extracted / "attachment.graphml", "--to", tmp_path / "a.csv") == 0
    assert load_network(tmp_path / "a.csv").edges == load_network(extracted / "attachment.graphml").edges
    assert run("export", "--index", extracted / "index.json", "--bags", tmp_path / "bags.csv") == 0
    assert (tmp_path / "bags.csv").read_text().splitlines()[1] == "user,digest,count"
    assert run("export") == 1
    assert run("export", "--network", extracted / "attachment.graphml") == 1


def test_ingest_and_messages_input(tmp_path):
    jsonl = tmp_path / "m.jsonl"
    assert run("ingest", "--archives", ARCHIVES, "--out", jsonl, "--report", tmp_path / "r.json") == 0
    assert len(jsonl.read_text().splitlines()) == 50
    assert json.loads((tmp_path / "r.json").read_text())["messages"] == 50
    assert run("extract", "--messages", jsonl, "--out-dir", tmp_path / "x") == 0
    assert (tmp_path / "x" / "attachment.graphml").is_file()


def test_link_command(tmp_path):
    assert run("synth", "--out-dir", tmp_path / "pair", "--count", "20", "--link-pair") == 0
    assert run("link", "--primary", tmp_path / "pair" / "primary", "--attachments",
               tmp_path / "pair" / "attachments", "--out", tmp_path / "link.json",
               "--linked-out", tmp_path / "linked.jsonl") == 0
    report = json.loads((tmp_path / "link.json").read_text())
    assert report["match_rate"] >= 0.9
    assert len((tmp_path / "linked.jsonl").read_text().splitlines()) == len(report["matched"])


# -- determinism and self-description ------------------------------------------

def test_rerun_is_byte_identical(extracted, tmp_path):
    again = tmp_path / "again"
    assert run("extract", *FIXTURE_ARGS, "--out-dir", again) == 0
    for path in sorted(extracted.iterdir()):
        assert (again / path.name).read_bytes() == path.read_bytes(), path.name


def test_every_artifact_embeds_config_hash(extracted):
    manifest = json.loads((extracted / "manifest.json").read_text())
    chash = manifest["config_hash"]
    for rel in manifest["artifacts"]:
        assert chash in (extracted / rel).read_text(), rel


def test_hash_ignores_paths_but_not_settings(tmp_path):
    base = parse_args(["extract", "--archives", "a", "--out-dir", "o"])
    moved = parse_args(["extract", "--archives", "b", "--out-dir", "p"])
    changed = parse_args(["extract", "--archives", "a", "--out-dir", "o", "--bulk", "20"])
    assert settings_of(base) == settings_of(moved) != settings_of(changed)


# -- config file ---------------------------------------------------------------

def test_config_file_defaults_and_overrides(tmp_path):
    cfg = tmp_path / "attachnet.conf"
    cfg.write_text("# thresholds\nbulk = 20\nno-bcc = true\nmin_size = 10  # bytes\n"
                   f"archives = {ARCHIVES}\nout_dir = {tmp_path}\n")
    args = parse_args(["--config", str(cfg), "extract"])
    assert (args.bulk, args.no_bcc, args.min_size) == (20, True, 10)
    assert str(args.archives) == ARCHIVES
    args = parse_args(["--config", str(cfg), "extract", "--bulk", "50"])
    assert args.bulk == 50


def test_config_file_errors(tmp_path, capsys):
    cfg = tmp_path / "bad.conf"
    cfg.write_text("colour = blue\n")
    assert main(["--config", str(cfg), "stats", "--network", "x.graphml"]) == 1
    assert "colour" in capsys.readouterr().err
    cfg.write_text("bulk = many\n")
    assert main(["--config", str(cfg), "extract", "--archives", ARCHIVES, "--out-dir", "o"]) == 1
    assert main(["--config", str(tmp_path / "missing.conf"), "stats", "--network", "x"]) == 2
