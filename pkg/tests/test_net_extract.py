import itertools

import pytest
from hypothesis import given, settings, strategies as st

from attachnet.archive import load_archive
from attachnet.net_extract import (AttachmentIndex, SharingEvent, build_attachment_index,
                                   build_communication_network, load_index, merge_indexes,
                                   project_shared_attachment_network, save_index,
                                   select_event_attachments)
from attachnet.network import NetworkKind
from attachnet.tram_filter import FilterConfig

from conftest import att, msg, random_corpus
from oracles import communication_oracle, projection_oracle

X, Y = att("X"), att("Y")
A, B, C, D = "a@x.org", "b@x.org", "c@x.org", "d@x.org"
NO_FILTERS = FilterConfig.disabled()


# -- communication network -----------------------------------------------------

def test_one_message_two_recipients():
    net = build_communication_network([msg("<1>", "A", ["B", "C"])])
    assert dict(net.edges) == {(A, B): 1, (A, C): 1}
    assert net.kind is NetworkKind.COMMUNICATION


def test_frequency_weight():
    net = build_communication_network([msg("<1>", "A", ["B"]), msg("<2>", "A", ["B"])])
    assert dict(net.edges) == {(A, B): 2}


def test_duplicates_and_self_mail_ignored():
    m = msg("<1>", "A", ["B", "A"], cc=["B"])
    net = build_communication_network([m, m])
    assert dict(net.edges) == {(A, B): 1}


def test_communication_matches_oracle_on_fixture(fixture_paths):
    messages = load_archive(fixture_paths["archives"]).messages
    assert dict(build_communication_network(messages).edges) == communication_oracle(messages)


@pytest.mark.parametrize("seed", range(20))
def test_communication_matches_oracle_random(seed):
    corpus = random_corpus(seed)
    messages = [m for _, ms in corpus.archives for m in ms]
    net = build_communication_network(messages)
    assert dict(net.edges) == communication_oracle(messages)
    core = {"u0@x.org", "u1@x.org", "u2@x.org"}
    restricted = build_communication_network(messages, core_users=core)
    assert dict(restricted.edges) == communication_oracle(messages, core)
    assert restricted.nodes <= core


def test_bcc_flag():
    m = msg("<1>", "A", ["B"], bcc=["C"])
    assert (A, C) in build_communication_network([m]).edges
    assert (A, C) not in build_communication_network([m], include_bcc=False).edges


# -- event selection -----------------------------------------------------------

def test_first_attachment_stands_for_the_email():
    assert select_event_attachments(msg("<1>", "A", ["B"], attachments=[X, Y])) == [X]
    assert select_event_attachments(msg("<1>", "A", ["B"])) == []


def test_same_attachment_in_two_emails_is_two_events():
    index = build_attachment_index([(A, [msg("<1>", "A", ["B"], attachments=[X]),
                                        msg("<2>", "A", ["C"], attachments=[X])])])
    assert index.message_ids(X.digest) == {"<1>", "<2>"}


# -- index ---------------------------------------------------------------------

def test_single_message_index():
    index = build_attachment_index([(A, [msg("<1>", "A", ["B"], attachments=[X])])])
    assert index.digests() == [X.digest]
    assert index.users(X.digest) == {A, B}
    assert len(index) == 1
    assert index.sizes[X.digest] == 2048


def test_custodian_outside_headers_joins_event():
    index = build_attachment_index([(C, [msg("<1>", "A", ["B"], attachments=[X])])])
    assert index.users(X.digest) == {A, B, C}


def test_custodian_mapping_by_name():
    index = build_attachment_index([("carol", [msg("<1>", "A", ["B"], attachments=[X])])],
                                   custodian_addresses={"carol": C})
    assert index.users(X.digest) == {A, B, C}


def test_copies_across_custodians_merge():
    m = msg("<1>", "A", ["B"], attachments=[X])
    index = build_attachment_index([(C, [m]), (D, [m])])
    assert len(index) == 1
    ev = index.events["<1>"]
    assert ev.participants == {A, B, C, D}
    assert ev.custodians == {C, D}
    assert ev.recipient_count == 1


def test_user_set_is_union_of_events():
    corpus = random_corpus(3)
    index = build_attachment_index(corpus.archives)
    for d in index.digests():
        evs = index.events_for(d)
        assert index.users(d) == frozenset().union(*(e.participants for e in evs))
        assert len(index.message_ids(d)) == len(evs)


@pytest.mark.parametrize("seed", range(15))
def test_index_matches_ground_truth(seed):
    corpus = random_corpus(seed)
    index = build_attachment_index(corpus.archives)
    assert sorted((mid, ev.digest, ev.participants) for mid, ev in index.events.items()) == corpus.events
    assert {mid: ev.recipient_count for mid, ev in index.events.items()} == corpus.recipient_counts
    assert {mid: ev.sender for mid, ev in index.events.items()} == corpus.event_senders


def test_merge_is_associative_and_order_free():
    corpus = random_corpus(7, max_messages=40)
    parts = [build_attachment_index([a]) for a in corpus.archives]
    whole = build_attachment_index(corpus.archives)
    assert merge_indexes(*parts) == whole
    assert merge_indexes(*reversed(parts)) == whole
    left = merge_indexes(merge_indexes(*parts[:2]), *parts[2:])
    assert left == whole


def test_index_rejects_inconsistent_input():
    ev = SharingEvent("<1>", "d", A, frozenset({A, B}), 1)
    with pytest.raises(ValueError):
        AttachmentIndex([ev, ev], {"d": 10})
    with pytest.raises(ValueError):
        AttachmentIndex([ev], {})


def test_index_round_trip(tmp_path):
    index = build_attachment_index(random_corpus(5).archives)
    save_index(index, tmp_path / "index.json", meta={"run": "x"})
    assert load_index(tmp_path / "index.json") == index


def test_load_index_rejects_foreign_files(tmp_path):
    from attachnet.errors import InputError
    (tmp_path / "a.json").write_text('{"format": "other"}')
    (tmp_path / "b.json").write_text("{not json")
    for name in ("a.json", "b.json", "missing.json"):
        with pytest.raises(InputError):
            load_index(tmp_path / name)


# -- projection ----------------------------------------------------------------

def test_single_event_triangle():
    index = build_attachment_index([(A, [msg("<1>", "A", ["B", "C"], attachments=[X])])])
    net = project_shared_attachment_network(index, NO_FILTERS)
    assert dict(net.edges) == {(A, B): 1, (A, C): 1, (B, C): 1}
    assert net.kind is NetworkKind.ATTACHMENT


def test_independent_senders_of_same_attachment():
    u = [f"u{i}@x.org" for i in range(1, 5)]
    index = build_attachment_index([(u[0], [msg("<1>", "U1", ["U2"], attachments=[X])]),
                                    (u[2], [msg("<2>", "U3", ["U4"], attachments=[X])])])
    net = project_shared_attachment_network(index, NO_FILTERS)
    assert set(net.edges) == set(itertools.combinations(u, 2))
    per_event = project_shared_attachment_network(index, NO_FILTERS, pair_scope="event")
    assert set(per_event.edges) == {(u[0], u[1]), (u[2], u[3])}


def test_scope_weights_on_repeated_pair():
    index = build_attachment_index([(A, [msg("<1>", "A", ["B"], attachments=[X]),
                                        msg("<2>", "A", ["B", "C"], attachments=[X]),
                                        msg("<3>", "A", ["D"], attachments=[X])])])
    digest = project_shared_attachment_network(index, NO_FILTERS)
    event = project_shared_attachment_network(index, NO_FILTERS, pair_scope="event")
    # the digest scope also ties D to B and C, who never shared an email with D
    assert dict(digest.edges) == {(A, B): 2, (A, C): 1, (A, D): 1, (B, C): 1, (B, D): 1, (C, D): 1}
    assert dict(event.edges) == {(A, B): 2, (A, C): 1, (A, D): 1, (B, C): 1}


def test_users_without_surviving_edges_are_dropped():
    index = build_attachment_index([(A, [msg("<1>", "A", ["B"], attachments=[X])]),
                                    (C, [msg("<2>", "C", [], attachments=[Y])])])
    net = project_shared_attachment_network(index, NO_FILTERS)
    assert net.nodes == {A, B}


def test_unknown_scope():
    with pytest.raises(ValueError):
        project_shared_attachment_network(AttachmentIndex([], {}), NO_FILTERS, pair_scope="pair")


@pytest.mark.parametrize("seed", range(10))
def test_projection_matches_oracle_on_20_messages(seed):
    corpus = random_corpus(100 + seed, max_messages=20)
    index = build_attachment_index(corpus.archives)
    for scope in ("digest", "event"):
        net = project_shared_attachment_network(index, NO_FILTERS, pair_scope=scope)
        assert dict(net.edges) == projection_oracle(corpus.events, scope)
    core = {"u0@x.org", "u1@x.org", "u3@x.org"}
    net = project_shared_attachment_network(index, NO_FILTERS, core_users=core)
    assert dict(net.edges) == projection_oracle(corpus.events, "digest", core)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from(["digest", "event"]))
def test_adding_a_message_never_removes_an_edge(seed, scope):
    corpus = random_corpus(seed, max_messages=15)
    (owner, messages), *rest = corpus.archives
    full = build_attachment_index(corpus.archives)
    fewer = build_attachment_index([(owner, messages[:-1])] + rest) if messages else full
    small = project_shared_attachment_network(fewer, NO_FILTERS, pair_scope=scope)
    big = project_shared_attachment_network(full, NO_FILTERS, pair_scope=scope)
    for edge, w in small.edges.items():
        assert big.edges.get(edge, 0) >= w


def test_node_set_within_participants():
    corpus = random_corpus(11)
    index = build_attachment_index(corpus.archives)
    assert project_shared_attachment_network(index, NO_FILTERS).nodes <= index.all_users()


def test_communication_weight_sum_counts_incidences(fixture_paths):
    messages = load_archive(fixture_paths["archives"]).messages
    incidences = 0
    for m in {m.message_id: m for m in messages}.values():
        if m.sender is not None:
            incidences += len({str(r) for r in m.recipients()} - {str(m.sender)})
    assert sum(build_communication_network(messages).edges.values()) == incidences
