"""End-to-end runs: ingest, link, extract, filter, analyze, export.

Every artifact is deterministic for fixed inputs and settings, and embeds
the hash of the settings that produced it. A manifest lists each
artifact's SHA-1.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence

from . import __version__
from .archive import (archive_statistics, dedupe_messages, group_by_custodian, load_archive,
                      write_messages)
from .corpus_link import DEFAULT_MIN_TRUNCATION_LEN, DEFAULT_REPAIR_OFFSETS, link_corpora, merge_linked
from .errors import InputError
from .graph_metrics import MEASURES, all_centralities, network_statistics, overall_rank, tie_diff
from .mime_ingest import NameDirectory
from .net_extract import (AttachmentIndex, build_attachment_index, build_communication_network,
                          project_shared_attachment_network, save_index)
from .network import Network, save_network
from .similarity import build_user_bags, kmeans_cluster, knn_query, write_bags_csv
from .tram_filter import FilterConfig, apply_filters, attachment_size_histogram, sweep_threshold

log = logging.getLogger(__name__)

MANIFEST_VERSION = 1
SIZE_BUCKETS = (100, 250, 500, 1024, 2048, 4096, 8192, 16384, 65536, 262144, 1048576)
DEFAULT_SWEEPS = {
    "bulk": (2, 5, 10, 20, 35, 50, 100, 200, 500, 1000),
    "event_freq": (1, 2, 3, 4, 5, 10, 20),
    "sender_freq": (1, 2, 3, 4, 5, 10, 20),
}


# ---------------------------------------------------------------------------
# Small I/O helpers
# ---------------------------------------------------------------------------

def config_hash(settings: Mapping) -> str:
    blob = json.dumps(settings, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha1(blob.encode("utf-8")).hexdigest()


def file_digest(path: str | Path) -> str:
    h = hashlib.sha1()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def tree_digest(root: str | Path) -> str:
    """Digest of every file under ``root`` keyed by relative path."""
    root = Path(root)
    h = hashlib.sha1()
    if root.is_file():
        h.update(file_digest(root).encode())
        return h.hexdigest()
    for path in sorted(p for p in root.rglob("*") if p.is_file()):
        h.update(path.relative_to(root).as_posix().encode("utf-8"))
        h.update(b"\0")
        h.update(file_digest(path).encode())
        h.update(b"\n")
    return h.hexdigest()


def write_json(path: str | Path, data, chash: Optional[str] = None) -> Path:
    path = Path(path)
    if chash is not None and isinstance(data, dict):
        data = {"config_hash": chash, **data}
    path.write_text(json.dumps(data, indent=1, sort_keys=True, ensure_ascii=False) + "\n",
                    encoding="utf-8")
    return path


def write_csv(path: str | Path, header: Sequence[str], rows: Iterable[Sequence],
              chash: Optional[str] = None) -> Path:
    buf = io.StringIO()
    if chash is not None:
        buf.write(f"# attachnet config_hash={chash}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([f"{v:.12g}" if isinstance(v, float) else v for v in row])
    path = Path(path)
    path.write_text(buf.getvalue(), encoding="utf-8")
    return path


def read_address_list(path: str | Path) -> list[str]:
    """One address per line; blank lines and ``#`` comments ignored."""
    from .mime_ingest import canonicalize_address

    out = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        addr = canonicalize_address(line)
        if addr is None:
            raise InputError(f"{path}: not an address: {line!r}")
        out.append(str(addr))
    return out


def read_mapping_csv(path: str | Path) -> dict[str, str]:
    """Two-column CSV (header row optional) as a dict."""
    out = {}
    with open(path, newline="", encoding="utf-8") as fh:
        for i, row in enumerate(csv.reader(fh)):
            if len(row) < 2 or row[0].startswith("#"):
                continue
            if i == 0 and row[0].strip().lower() in ("custodian", "folder", "display_name", "name"):
                continue
            out[row[0].strip()] = row[1].strip()
    return out


def write_network_files(net: Network, out_dir: Path, stem: str, chash: str) -> list[Path]:
    net = net.with_meta(config_hash=chash)
    paths = []
    for suffix in (".graphml", ".csv", ".json"):
        path = out_dir / f"{stem}{suffix}"
        save_network(net, path)
        paths.append(path)
    return paths


def centrality_rows(net: Network, measures: Sequence[str] = MEASURES):
    sets = all_centralities(net, measures)
    rows = []
    for s in sets:
        for user in sorted(s.ranks, key=s.ranks.__getitem__):
            rows.append((s.measure, s.ranks[user], user, float(s.scores[user])))
    return sets, rows


def rank_rows(sets, top_k: int):
    table = []
    for pos, (user, value) in enumerate(overall_rank(sets, top_k), start=1):
        codes = ",".join(f"{s.measure}({s.ranks[user]})" for s in sets)
        table.append((pos, user, float(value), codes))
    return table


def write_manifest(out_dir: Path, artifacts: Iterable[Path], settings: Mapping,
                   inputs: Mapping[str, str]) -> Path:
    chash = config_hash(settings)
    entries = {p.relative_to(out_dir).as_posix(): file_digest(p) for p in sorted(set(artifacts))}
    manifest = {
        "tool": "attachnet",
        "version": __version__,
        "manifest_version": MANIFEST_VERSION,
        "config_hash": chash,
        "config": dict(settings),
        "inputs": dict(sorted(inputs.items())),
        "artifacts": entries,
    }
    return write_json(out_dir / "manifest.json", manifest)


# ---------------------------------------------------------------------------
# Full pipeline
# ---------------------------------------------------------------------------

@dataclass
class PipelineConfig:
    archives: Path
    out_dir: Path
    secondary: Optional[Path] = None
    names: Optional[Path] = None
    custodians: Optional[Path] = None
    core_users: Optional[Path] = None
    filters: FilterConfig = field(default_factory=FilterConfig)
    include_bcc: bool = True
    pair_scope: str = "digest"
    seed: int = 0
    clusters: int = 15
    knn_users: tuple = ()
    knn_k: int = 6
    metric: str = "weighted_jaccard"
    top_k: int = 10
    sweeps: bool = True
    plots: bool = True
    min_trunc: int = DEFAULT_MIN_TRUNCATION_LEN
    repair_offsets: tuple = DEFAULT_REPAIR_OFFSETS
    jobs: int = 1

    def validate(self) -> None:
        for name in ("archives", "secondary", "names", "custodians", "core_users"):
            value = getattr(self, name)
            if value is not None and not Path(value).exists():
                raise InputError(f"{name} path does not exist: {value}")

    def settings(self) -> dict:
        """Path-free settings; these determine the config hash."""
        return {
            "filters": self.filters.to_dict(),
            "include_bcc": self.include_bcc,
            "pair_scope": self.pair_scope,
            "seed": self.seed,
            "clusters": self.clusters,
            "knn_users": list(self.knn_users),
            "knn_k": self.knn_k,
            "metric": self.metric,
            "top_k": self.top_k,
            "sweeps": self.sweeps,
            "plots": self.plots,
            "linked": self.secondary is not None,
            "min_trunc": self.min_trunc,
            "repair_offsets": [str(o) for o in self.repair_offsets],
        }


def _load(path: Path, directory, jobs: int):
    result = load_archive(path, directory, jobs=jobs)
    if not result.messages:
        raise InputError(f"no messages found in {path}")
    return result


def run_pipeline(cfg: PipelineConfig) -> dict:
    """Run every stage and write all artifacts below ``cfg.out_dir``.

    Returns the manifest dictionary.
    """
    from .plotting import plot_size_histogram, plot_sweep

    cfg.validate()
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    settings = cfg.settings()
    chash = config_hash(settings)
    artifacts: list[Path] = []

    directory = NameDirectory.from_csv(cfg.names) if cfg.names else None
    custodian_map = read_mapping_csv(cfg.custodians) if cfg.custodians else None
    core = read_address_list(cfg.core_users) if cfg.core_users else None
    inputs = {"archives": tree_digest(cfg.archives)}
    for name in ("secondary", "names", "custodians", "core_users"):
        if getattr(cfg, name) is not None:
            inputs[name] = tree_digest(getattr(cfg, name))

    primary = _load(cfg.archives, directory, cfg.jobs)
    comm_messages = dedupe_messages(primary.messages)
    if cfg.secondary is not None:
        secondary = _load(cfg.secondary, directory, cfg.jobs)
        report = link_corpora(primary.messages, secondary.messages, cfg.min_trunc,
                              list(cfg.repair_offsets))
        artifacts.append(write_json(out / "link_report.json", report.to_dict(), chash))
        attach_messages = merge_linked(primary.messages, secondary.messages, report)
    else:
        attach_messages = primary.messages

    write_messages(comm_messages, out / "messages.jsonl")
    artifacts.append(out / "messages.jsonl")
    ingest = archive_statistics(attach_messages)
    ingest["failures"] = [list(f) for f in primary.failures]
    artifacts.append(write_json(out / "ingest_report.json", ingest, chash))

    comm = build_communication_network(comm_messages, core, cfg.include_bcc)
    index = build_attachment_index(group_by_custodian(attach_messages), custodian_map, cfg.include_bcc)
    save_index(index, out / "index.json", {"config_hash": chash})
    artifacts.append(out / "index.json")

    unfiltered = project_shared_attachment_network(index, None, core, cfg.pair_scope)
    filtered_index = apply_filters(index, cfg.filters)
    filtered = project_shared_attachment_network(filtered_index, None, core, cfg.pair_scope)
    artifacts += write_network_files(comm, out, "communication", chash)
    artifacts += write_network_files(unfiltered, out, "attachment_unfiltered", chash)
    artifacts += write_network_files(filtered, out, "attachment", chash)

    hist = attachment_size_histogram(index, SIZE_BUCKETS)
    artifacts.append(write_csv(out / "size_histogram.csv", ("low", "high", "count"), hist.rows(), chash))
    if cfg.plots:
        artifacts.append(plot_size_histogram(hist, out / "size_histogram.png"))

    if cfg.sweeps:
        for param, values in DEFAULT_SWEEPS.items():
            points = sweep_threshold(index, cfg.filters, param, values, core, cfg.pair_scope)
            artifacts.append(write_csv(out / f"sweep_{param}.csv", ("value", "avg_degree", "avg_clustering"),
                                       [(p.value, p.avg_degree, p.avg_clustering) for p in points], chash))
            if cfg.plots:
                artifacts.append(plot_sweep(points, param, out / f"sweep_{param}.png"))

    stats = {}
    for name, net in (("communication", comm), ("attachment", filtered), ("attachment_unfiltered", unfiltered)):
        if net.nodes:
            stats[name] = network_statistics(net).to_dict()
    artifacts.append(write_json(out / "stats.json", stats, chash))

    for name, net in (("communication", comm), ("attachment", filtered)):
        if not net.nodes:
            continue
        sets, rows = centrality_rows(net)
        artifacts.append(write_csv(out / f"centrality_{name}.csv", ("measure", "rank", "user", "score"),
                                   rows, chash))
        artifacts.append(write_csv(out / f"rank_{name}.csv", ("overall_rank", "user", "value", "ranks"),
                                   rank_rows(sets, cfg.top_k), chash))

    diff = tie_diff(comm, filtered, filtered_index)
    artifacts.append(write_json(out / "tie_diff.json", diff.to_dict(), chash))

    bags = build_user_bags(filtered_index, None, core)
    artifacts.append(out / "bags.csv")
    write_bags_csv(bags, out / "bags.csv", f"attachnet config_hash={chash}")

    if cfg.knn_users:
        knn = {}
        for user in cfg.knn_users:
            k = min(cfg.knn_k, len(bags))
            knn[user] = [{"user": u, "distance": d} for u, d in knn_query(bags, user, k, cfg.metric)]
        artifacts.append(write_json(out / "knn.json", knn, chash))

    if bags:
        k = min(cfg.clusters, len(bags))
        result = kmeans_cluster(bags, k, cfg.seed)
        data = result.to_dict()
        if k != cfg.clusters:
            data["notes"].insert(0, f"k reduced from {cfg.clusters} to {k} (number of users)")
        artifacts.append(write_json(out / "clusters.json", data, chash))

    manifest_path = write_manifest(out, artifacts, settings, inputs)
    return json.loads(manifest_path.read_text(encoding="utf-8"))
