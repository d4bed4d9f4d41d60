"""Command-line interface.

Usage::

    attachnet [--config FILE] [-v] <command> [options]

Every option may also be given in the ``--config`` file as ``key = value``
(key is the long flag name, dashes or underscores). Command-line flags
override the file.

Exit codes: 0 success, 1 usage error, 2 input error, 3 analysis error.
"""

from __future__ import annotations

import argparse
import configparser
import json
import logging
import re
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from .errors import AttachnetError, InputError

log = logging.getLogger("attachnet")

EXIT_OK, EXIT_USAGE, EXIT_INPUT, EXIT_ANALYSIS = 0, 1, 2, 3

# Options that name files; they do not enter the config hash.
PATH_OPTIONS = frozenset({
    "config", "archives", "messages", "secondary", "names", "custodians", "core_users",
    "primary", "attachments", "folder_offsets", "index", "network", "against", "out",
    "out_dir", "plot", "histogram", "report", "linked_out", "bags", "to",
})
NON_SETTINGS = frozenset({"command", "verbose", "func", "jobs"})


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


# ---------------------------------------------------------------------------
# Argument groups
# ---------------------------------------------------------------------------

def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _offset_list(text: str) -> list:
    out = []
    for tok in (t.strip() for t in text.split(",")):
        if not tok:
            continue
        if tok.lower() == "zone":
            out.append("zone")
            continue
        try:
            out.append(float(tok))
        except ValueError:
            raise argparse.ArgumentTypeError(f"bad offset {tok!r}")
    return out


def _bool(text: str) -> bool:
    value = text.strip().lower()
    if value in ("1", "true", "yes", "on"):
        return True
    if value in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"expected a boolean, got {text!r}")


def _add_input(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("input")
    g.add_argument("--archives", type=Path, help="archive root (EML tree or mbox files)")
    g.add_argument("--messages", type=Path, help="messages JSONL written by 'ingest' or 'link'")
    g.add_argument("--names", type=Path, help="name directory CSV (display_name,address)")
    g.add_argument("--jobs", type=int, default=1, help="parser processes")


def _add_custodians(p: argparse.ArgumentParser) -> None:
    p.add_argument("--custodians", type=Path, help="custodian,address CSV naming each mailbox owner")
    p.add_argument("--no-bcc", action="store_true", help="ignore Bcc recipients")


def _add_core(p: argparse.ArgumentParser) -> None:
    p.add_argument("--core-users", type=Path, help="file with one address per line; restrict nodes")


def _add_filters(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("TRAM filters")
    g.add_argument("--min-size", type=int, default=1024, help="drop attachments of at most this many bytes")
    g.add_argument("--bulk", type=int, default=35, help="drop events with more recipients")
    g.add_argument("--max-freq", type=int, default=2, help="drop digests seen in more emails")
    g.add_argument("--max-senders", type=int, default=2, help="drop digests with more distinct senders")
    g.add_argument("--no-size-filter", action="store_true")
    g.add_argument("--no-bulk-filter", action="store_true")
    g.add_argument("--no-freq-filter", action="store_true")
    g.add_argument("--no-sender-filter", action="store_true")
    g.add_argument("--no-filters", action="store_true", help="disable every rule")
    g.add_argument("--pair-scope", choices=("digest", "event"), default="digest",
                   help="tie rule for projection (default: digest)")


def _add_link(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("linking")
    g.add_argument("--min-trunc", type=int, default=100, help="minimum body bytes for prefix matches")
    g.add_argument("--repair-offsets", type=_offset_list, default=None,
                   help="hour offsets tried on the attachment side, e.g. zone,2,3,4,10,12")
    g.add_argument("--folder-offsets", type=Path, help="folder,hours CSV of per-folder shifts")
    g.add_argument("--strip-trailer", default=None, help="regex removed from bodies before hashing")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="attachnet", description="Email communication and shared-attachment networks.")
    parser.add_argument("--config", type=Path, help="key = value file providing option defaults")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    parser.add_argument("--version", action="version", version=f"attachnet {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="command", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("ingest", help="parse archives into a messages JSONL file")
    _add_input(p)
    p.add_argument("--out", type=Path, required=True, help="messages JSONL")
    p.add_argument("--report", type=Path, help="per-mailbox statistics JSON")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("link", help="link an attachment corpus to a header-authoritative corpus")
    p.add_argument("--primary", type=Path, required=True, help="header-authoritative archive root")
    p.add_argument("--attachments", type=Path, required=True, help="attachment-bearing archive root")
    p.add_argument("--names", type=Path)
    p.add_argument("--jobs", type=int, default=1)
    _add_link(p)
    p.add_argument("--out", type=Path, required=True, help="link report JSON")
    p.add_argument("--linked-out", type=Path, help="write merged messages JSONL here")
    p.set_defaults(func=cmd_link)

    p = sub.add_parser("extract", help="build the communication and attachment networks")
    _add_input(p)
    _add_custodians(p)
    _add_core(p)
    p.add_argument("--secondary", type=Path, help="attachment-bearing archive to link against the input")
    _add_link(p)
    _add_filters(p)
    p.add_argument("--out-dir", type=Path, required=True)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("filter-sweep", help="network shape against one filter threshold")
    p.add_argument("--index", type=Path, required=True, help="index.json written by 'extract'")
    p.add_argument("--parameter", choices=("bulk", "event_freq", "sender_freq", "size"), required=True)
    p.add_argument("--values", type=_int_list, required=True, help="ascending comma-separated thresholds")
    _add_core(p)
    _add_filters(p)
    p.add_argument("--out", type=Path, required=True, help="sweep CSV")
    p.add_argument("--plot", type=Path, help="PNG path (default: next to --out)")
    p.add_argument("--no-plot", action="store_true")
    p.add_argument("--histogram", type=Path, help="also write the attachment size histogram CSV here")
    p.add_argument("--buckets", type=_int_list, default=None, help="histogram bucket edges in bytes")
    p.set_defaults(func=cmd_filter_sweep)

    p = sub.add_parser("stats", help="summary statistics of a network")
    p.add_argument("--network", type=Path, required=True)
    p.add_argument("--out", type=Path, help="JSON (default: stdout)")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("centrality", help="centrality scores and ranks")
    p.add_argument("--network", type=Path, required=True)
    p.add_argument("--measure", default="all",
                   choices=("all", "degree", "eigenvector", "betweenness", "closeness", "unique_ties"))
    p.add_argument("--top", type=int, default=0, help="rows per measure (0: all)")
    p.add_argument("--out", type=Path, help="CSV or JSON by suffix (default: CSV on stdout)")
    p.set_defaults(func=cmd_centrality)

    p = sub.add_parser("rank", help="overall rank across the five centrality measures")
    p.add_argument("--network", type=Path, required=True)
    p.add_argument("--top-k", type=int, default=10, help="rank cut-off counted by the formula")
    p.add_argument("--limit", type=int, default=0, help="rows to print (0: all)")
    p.add_argument("--out", type=Path, help="CSV or JSON by suffix (default: CSV on stdout)")
    p.set_defaults(func=cmd_rank)

    p = sub.add_parser("diff", help="ties gained and lost between two networks")
    p.add_argument("--network", type=Path, required=True, help="network whose extra ties count as gained")
    p.add_argument("--against", type=Path, required=True, help="baseline network, e.g. communication")
    p.add_argument("--index", type=Path, help="index.json used to name the friend behind each gained tie")
    _add_filters(p)
    p.add_argument("--limit", type=int, default=0, help="keep this many ties per list (0: all)")
    p.add_argument("--out", type=Path, help="JSON (default: stdout)")
    p.set_defaults(func=cmd_diff)

    p = sub.add_parser("knn", help="users with the most similar attachment bags")
    p.add_argument("--index", type=Path, required=True)
    p.add_argument("--user", required=True)
    p.add_argument("-k", "--k", type=int, default=6, help="list length including the user")
    p.add_argument("--metric", choices=("weighted_jaccard", "cosine"), default="weighted_jaccard")
    _add_core(p)
    _add_filters(p)
    p.add_argument("--out", type=Path, help="JSON (default: stdout)")
    p.set_defaults(func=cmd_knn)

    p = sub.add_parser("cluster", help="k-means over attachment-bag distances")
    p.add_argument("--index", type=Path, required=True)
    p.add_argument("-k", "--k", type=int, default=15)
    p.add_argument("--seed", type=int, default=0)
    _add_core(p)
    _add_filters(p)
    p.add_argument("--out", type=Path, help="JSON (default: stdout)")
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("export", help="convert a network file or write attachment bags")
    p.add_argument("--network", type=Path, help="network to convert")
    p.add_argument("--to", type=Path, help="target file; format from suffix (.graphml, .csv, .json)")
    p.add_argument("--index", type=Path, help="index.json to export bags from")
    p.add_argument("--bags", type=Path, help="bags CSV (user,digest,count)")
    _add_core(p)
    _add_filters(p)
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("run", help="the whole pipeline into one output directory")
    _add_input(p)
    _add_custodians(p)
    _add_core(p)
    p.add_argument("--secondary", type=Path, help="attachment-bearing archive to link against --archives")
    p.add_argument("--min-trunc", type=int, default=100)
    p.add_argument("--repair-offsets", type=_offset_list, default=None)
    _add_filters(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--clusters", type=int, default=15)
    p.add_argument("--knn-user", action="append", default=None, help="repeatable")
    p.add_argument("-k", "--k", type=int, default=6, help="knn list length")
    p.add_argument("--metric", choices=("weighted_jaccard", "cosine"), default="weighted_jaccard")
    p.add_argument("--top-k", type=int, default=10)
    p.add_argument("--no-sweeps", action="store_true")
    p.add_argument("--no-plots", action="store_true")
    p.add_argument("--out-dir", type=Path, required=True)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("synth", help="write the deterministic synthetic fixture")
    p.add_argument("--out-dir", type=Path, required=True)
    p.add_argument("--count", type=int, default=50, help="number of message files")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--link-pair", action="store_true", help="write a primary/attachments pair instead")
    p.set_defaults(func=cmd_synth)
    return parser


# ---------------------------------------------------------------------------
# Config file
# ---------------------------------------------------------------------------

def read_config(path: Path) -> dict[str, str]:
    """Flat ``key = value`` pairs; ``#`` starts a comment."""
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#",),
                                       comment_prefixes=("#", ";"))
    parser.optionxform = str
    try:
        text = Path(path).read_text(encoding="utf-8")
        parser.read_string("[attachnet]\n" + text, source=str(path))
    except OSError as exc:
        raise InputError(f"cannot read config {path}: {exc.strerror}")
    except configparser.Error as exc:
        raise UsageError(f"bad config file {path}: {exc.message.splitlines()[0]}")
    return {k.replace("-", "_"): v for k, v in parser["attachnet"].items()}


def _convert(action: argparse.Action, raw: str):
    if isinstance(action, (argparse._StoreTrueAction, argparse._StoreFalseAction)):
        return _bool(raw)
    if isinstance(action, argparse._AppendAction):
        return [v.strip() for v in raw.split(",") if v.strip()]
    value = action.type(raw) if action.type is not None else raw
    if action.choices is not None and value not in action.choices:
        raise argparse.ArgumentTypeError(f"{raw!r} is not one of {', '.join(map(str, action.choices))}")
    return value


def _apply_config(parser: argparse.ArgumentParser, values: dict[str, str], command: str) -> None:
    subparsers = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    known = {a.dest for sp in subparsers.choices.values() for a in sp._actions}
    unknown = sorted(set(values) - known - {"config", "verbose"})
    if unknown:
        raise UsageError(f"unknown config keys: {', '.join(unknown)}")
    sub = subparsers.choices[command]
    defaults = {}
    for action in sub._actions:
        if action.dest in values:
            try:
                defaults[action.dest] = _convert(action, values[action.dest])
            except (argparse.ArgumentTypeError, ValueError) as exc:
                raise UsageError(f"config key {action.dest}: {exc}")
            action.required = False
    sub.set_defaults(**defaults)


def parse_args(argv: Optional[Sequence[str]] = None) -> argparse.Namespace:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    pre = _Parser(add_help=False)
    pre.add_argument("--config", type=Path)
    pre.add_argument("command", nargs="?")
    known, _ = pre.parse_known_args(argv)
    if known.config is not None and known.command is not None:
        subparsers = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
        if known.command in subparsers.choices:
            _apply_config(parser, read_config(known.config), known.command)
    return parser.parse_args(argv)


# ---------------------------------------------------------------------------
# Helpers shared by commands
# ---------------------------------------------------------------------------

def settings_of(args: argparse.Namespace) -> dict:
    """Path-free option values that determine a command's output."""
    out = {"command": args.command}
    for key, value in sorted(vars(args).items()):
        if key in PATH_OPTIONS or key in NON_SETTINGS:
            continue
        out[key] = value
    return out


def _hash(args) -> str:
    from .pipeline import config_hash
    return config_hash(settings_of(args))


def filter_config(args):
    from .tram_filter import FilterConfig

    if args.no_filters:
        return FilterConfig.disabled()
    return FilterConfig(
        min_size_bytes=args.min_size,
        bulk_recipient_threshold=args.bulk,
        max_event_frequency=args.max_freq,
        max_sender_frequency=args.max_senders,
        size_rule=not args.no_size_filter,
        bulk_rule=not args.no_bulk_filter,
        event_frequency_rule=not args.no_freq_filter,
        sender_frequency_rule=not args.no_sender_filter,
    )


def _require(path: Optional[Path], what: str) -> Path:
    if path is None:
        raise UsageError(f"{what} is required")
    if not path.exists():
        raise InputError(f"{what} not found: {path}")
    return path


def _directory(args):
    from .mime_ingest import NameDirectory
    return NameDirectory.from_csv(_require(args.names, "--names")) if args.names else None


def _core(args):
    from .pipeline import read_address_list
    if getattr(args, "core_users", None) is None:
        return None
    return read_address_list(_require(args.core_users, "--core-users"))


def _load_messages(args, directory=None):
    from .archive import load_archive, read_messages

    if args.messages is not None:
        messages = read_messages(_require(args.messages, "--messages"))
        source = args.messages
    elif args.archives is not None:
        result = load_archive(args.archives, directory, jobs=args.jobs)
        for where, why in result.failures:
            log.warning("skipped %s: %s", where, why)
        messages, source = result.messages, args.archives
    else:
        raise UsageError("one of --archives or --messages is required")
    if not messages:
        raise InputError(f"no messages found in {source}")
    return messages


def _load_index(args):
    from .net_extract import load_index
    return load_index(_require(args.index, "--index"))


def _load_net(path: Path, what: str):
    from .network import load_network
    return load_network(_require(path, what))


def _emit_json(data: dict, out: Optional[Path], chash: str) -> list[Path]:
    from .pipeline import write_json
    if out is None:
        sys.stdout.write(json.dumps({"config_hash": chash, **data}, indent=1, sort_keys=True) + "\n")
        return []
    return [write_json(out, data, chash)]


def _emit_table(header, rows, out: Optional[Path], chash: str) -> list[Path]:
    from .pipeline import write_csv, write_json
    if out is not None and out.suffix == ".json":
        return [write_json(out, {"columns": list(header), "rows": [list(r) for r in rows]}, chash)]
    if out is not None:
        return [write_csv(out, header, rows, chash)]
    import csv
    sys.stdout.write(f"# attachnet config_hash={chash}\n")
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(header)
    w.writerows([f"{v:.12g}" if isinstance(v, float) else v for v in r] for r in rows)
    return []


def _link(primary_msgs, secondary_msgs, args):
    from .corpus_link import link_corpora
    from .pipeline import read_mapping_csv

    folder_offsets = None
    if args.folder_offsets is not None:
        raw = read_mapping_csv(_require(args.folder_offsets, "--folder-offsets"))
        try:
            folder_offsets = {k: [float(v) for v in val.split(";") if v] for k, val in raw.items()}
        except ValueError:
            raise InputError(f"{args.folder_offsets}: offsets must be numbers")
    return link_corpora(primary_msgs, secondary_msgs, args.min_trunc, args.repair_offsets,
                        folder_offsets, args.strip_trailer)


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def cmd_ingest(args) -> int:
    from .archive import archive_statistics, write_messages
    from .pipeline import write_json

    messages = _load_messages(args, _directory(args))
    write_messages(messages, args.out)
    if args.report:
        write_json(args.report, archive_statistics(messages), _hash(args))
    log.info("%d messages written to %s", len(messages), args.out)
    return EXIT_OK


def cmd_link(args) -> int:
    from .archive import load_archive, write_messages
    from .corpus_link import merge_linked
    from .pipeline import write_json

    directory = _directory(args)
    a = load_archive(_require(args.primary, "--primary"), directory, jobs=args.jobs).messages
    b = load_archive(_require(args.attachments, "--attachments"), directory, jobs=args.jobs).messages
    if not a or not b:
        raise InputError(f"no messages found in {args.primary if not a else args.attachments}")
    report = _link(a, b, args)
    write_json(args.out, report.to_dict(), _hash(args))
    if args.linked_out:
        write_messages(merge_linked(a, b, report), args.linked_out)
    print(f"matched {len(report.matched)}/{report.total_a} ({report.match_rate:.1%})")
    return EXIT_OK


def cmd_extract(args) -> int:
    from .archive import archive_statistics, dedupe_messages, group_by_custodian, load_archive
    from .corpus_link import merge_linked
    from .net_extract import build_attachment_index, build_communication_network, \
        project_shared_attachment_network, save_index
    from .pipeline import read_mapping_csv, tree_digest, write_json, write_manifest, write_network_files
    from .tram_filter import apply_filters

    directory = _directory(args)
    primary = _load_messages(args, directory)
    attach = primary
    chash = _hash(args)
    out = args.out_dir
    out.mkdir(parents=True, exist_ok=True)
    artifacts = []
    if args.secondary is not None:
        secondary = load_archive(_require(args.secondary, "--secondary"), directory, jobs=args.jobs).messages
        if not secondary:
            raise InputError(f"no messages found in {args.secondary}")
        report = _link(primary, secondary, args)
        artifacts.append(write_json(out / "link_report.json", report.to_dict(), chash))
        attach = merge_linked(primary, secondary, report)

    custodians = read_mapping_csv(_require(args.custodians, "--custodians")) if args.custodians else None
    core = _core(args)
    include_bcc = not args.no_bcc
    comm = build_communication_network(dedupe_messages(primary), core, include_bcc)
    index = build_attachment_index(group_by_custodian(attach), custodians, include_bcc)
    save_index(index, out / "index.json", {"config_hash": chash})
    artifacts.append(out / "index.json")
    filters = filter_config(args)
    unfiltered = project_shared_attachment_network(index, None, core, args.pair_scope)
    filtered = project_shared_attachment_network(apply_filters(index, filters), None, core, args.pair_scope)
    artifacts += write_network_files(comm, out, "communication", chash)
    artifacts += write_network_files(filtered, out, "attachment", chash)
    artifacts += write_network_files(unfiltered, out, "attachment_unfiltered", chash)
    artifacts.append(write_json(out / "ingest_report.json", archive_statistics(attach), chash))

    inputs = {}
    for name in ("archives", "messages", "secondary", "names", "custodians", "core_users"):
        if getattr(args, name, None) is not None:
            inputs[name] = tree_digest(getattr(args, name))
    write_manifest(out, artifacts, settings_of(args), inputs)
    print(f"communication: {len(comm.nodes)} nodes {len(comm.edges)} edges; "
          f"attachment: {len(filtered.nodes)} nodes {len(filtered.edges)} edges")
    return EXIT_OK


def cmd_filter_sweep(args) -> int:
    from .pipeline import SIZE_BUCKETS, write_csv
    from .plotting import plot_size_histogram, plot_sweep
    from .tram_filter import attachment_size_histogram, sweep_threshold

    index = _load_index(args)
    chash = _hash(args)
    points = sweep_threshold(index, filter_config(args), args.parameter, args.values, _core(args),
                             args.pair_scope)
    write_csv(args.out, ("value", "avg_degree", "avg_clustering"),
              [(p.value, p.avg_degree, p.avg_clustering) for p in points], chash)
    if not args.no_plot:
        plot_sweep(points, args.parameter, args.plot or args.out.with_suffix(".png"))
    if args.histogram:
        hist = attachment_size_histogram(index, args.buckets or SIZE_BUCKETS)
        write_csv(args.histogram, ("low", "high", "count"), hist.rows(), chash)
        if not args.no_plot:
            plot_size_histogram(hist, args.histogram.with_suffix(".png"))
    return EXIT_OK


def cmd_stats(args) -> int:
    from .graph_metrics import network_statistics

    net = _load_net(args.network, "--network")
    _emit_json(network_statistics(net).to_dict(), args.out, _hash(args))
    return EXIT_OK


def cmd_centrality(args) -> int:
    from .graph_metrics import MEASURES
    from .pipeline import centrality_rows

    net = _load_net(args.network, "--network")
    measures = MEASURES if args.measure == "all" else (args.measure,)
    _, rows = centrality_rows(net, measures)
    if args.top > 0:
        rows = [r for r in rows if r[1] <= args.top]
    _emit_table(("measure", "rank", "user", "score"), rows, args.out, _hash(args))
    return EXIT_OK


def cmd_rank(args) -> int:
    from .pipeline import centrality_rows, rank_rows

    net = _load_net(args.network, "--network")
    sets, _ = centrality_rows(net)
    rows = rank_rows(sets, args.top_k)
    if args.limit > 0:
        rows = rows[:args.limit]
    _emit_table(("overall_rank", "user", "value", "ranks"), rows, args.out, _hash(args))
    return EXIT_OK


def cmd_diff(args) -> int:
    from .graph_metrics import tie_diff
    from .tram_filter import apply_filters

    net = _load_net(args.network, "--network")
    base = _load_net(args.against, "--against")
    index = apply_filters(_load_index(args), filter_config(args)) if args.index else None
    diff = tie_diff(base, net, index).to_dict()
    counts = {k: len(v) for k, v in diff.items()}
    if args.limit > 0:
        diff = {k: v[:args.limit] for k, v in diff.items()}
    diff["counts"] = counts
    _emit_json(diff, args.out, _hash(args))
    return EXIT_OK


def _bags(args):
    from .similarity import build_user_bags
    return build_user_bags(_load_index(args), filter_config(args), _core(args))


def cmd_knn(args) -> int:
    from .mime_ingest import canonicalize_address
    from .similarity import knn_query

    user = canonicalize_address(args.user)
    if user is None:
        raise UsageError(f"--user: not an address: {args.user!r}")
    result = knn_query(_bags(args), str(user), args.k, args.metric)
    _emit_json({"user": str(user), "k": args.k, "metric": args.metric,
                "neighbors": [{"user": u, "distance": d} for u, d in result]}, args.out, _hash(args))
    return EXIT_OK


def cmd_cluster(args) -> int:
    from .similarity import kmeans_cluster

    result = kmeans_cluster(_bags(args), args.k, args.seed)
    _emit_json(result.to_dict(), args.out, _hash(args))
    return EXIT_OK


def cmd_export(args) -> int:
    from .network import save_network
    from .similarity import write_bags_csv

    did = False
    if args.network is not None or args.to is not None:
        if args.network is None or args.to is None:
            raise UsageError("--network and --to go together")
        net = _load_net(args.network, "--network")
        save_network(net.with_meta(config_hash=_hash(args)), args.to)
        did = True
    if args.index is not None or args.bags is not None:
        if args.index is None or args.bags is None:
            raise UsageError("--index and --bags go together")
        write_bags_csv(_bags(args), args.bags, f"attachnet config_hash={_hash(args)}")
        did = True
    if not did:
        raise UsageError("nothing to export; give --network/--to or --index/--bags")
    return EXIT_OK


def cmd_run(args) -> int:
    from .corpus_link import DEFAULT_REPAIR_OFFSETS
    from .pipeline import PipelineConfig, run_pipeline

    if args.archives is None:
        raise UsageError("--archives is required")
    cfg = PipelineConfig(
        archives=args.archives, out_dir=args.out_dir, secondary=args.secondary, names=args.names,
        custodians=args.custodians, core_users=args.core_users, filters=filter_config(args),
        include_bcc=not args.no_bcc, pair_scope=args.pair_scope, seed=args.seed,
        clusters=args.clusters, knn_users=tuple(args.knn_user or ()), knn_k=args.k,
        metric=args.metric, top_k=args.top_k, sweeps=not args.no_sweeps, plots=not args.no_plots,
        min_trunc=args.min_trunc,
        repair_offsets=tuple(args.repair_offsets) if args.repair_offsets is not None else DEFAULT_REPAIR_OFFSETS,
        jobs=args.jobs,
    )
    manifest = run_pipeline(cfg)
    print(f"{len(manifest['artifacts'])} artifacts written to {args.out_dir} "
          f"(config {manifest['config_hash'][:12]})")
    return EXIT_OK


def cmd_synth(args) -> int:
    from .synthetic import generate_corpus, generate_link_pair

    if args.link_pair:
        paths = generate_link_pair(args.out_dir, args.count, args.seed)
    else:
        paths = generate_corpus(args.out_dir, args.count, args.seed)
    for role, path in paths.items():
        print(f"{role}: {path}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------

def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = parse_args(argv)
    except UsageError as exc:
        print(f"{exc}", file=sys.stderr)
        return EXIT_USAGE
    except AttachnetError as exc:
        print(f"attachnet: error: {exc}", file=sys.stderr)
        return exc.exit_code
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="attachnet: %(levelname)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"attachnet {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except AttachnetError as exc:
        print(f"attachnet {args.command}: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except (ValueError, re.error) as exc:
        print(f"attachnet {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"attachnet {args.command}: error: {exc.strerror or exc}: {exc.filename or ''}".rstrip(": "),
              file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
