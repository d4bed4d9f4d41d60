import pytest

from attachnet.errors import InputError
from attachnet.network import Network, NetworkKind, edge_key, load_network, save_network


def _net(kind=NetworkKind.ATTACHMENT, **meta):
    return Network.from_weights({("b@x.org", "a@x.org"): 2, ("b@x.org", "c@x.org"): 1},
                                kind=kind, nodes=["lonely@x.org"], meta=meta)


def test_edges_are_unordered():
    net = _net()
    assert list(net.edges) == [("a@x.org", "b@x.org"), ("b@x.org", "c@x.org")]
    assert net.weight("b@x.org", "a@x.org") == net.weight("a@x.org", "b@x.org") == 2
    assert net.weight("a@x.org", "c@x.org") == 0
    assert edge_key("z", "a") == ("a", "z")


def test_from_weights_merges_both_orientations():
    net = Network.from_weights({("a", "b"): 1, ("b", "a"): 2})
    assert dict(net.edges) == {("a", "b"): 3}


@pytest.mark.parametrize("edges", [{("a", "a"): 1}, {("a", "b"): 0}, {("a", "b"): 1.5}, {("a", "zz"): 1}])
def test_invalid_networks_rejected(edges):
    with pytest.raises(ValueError):
        Network(frozenset({"a", "b"}), edges)


def test_adjacency_and_isolated_nodes():
    net = _net()
    assert dict(net.adjacency["b@x.org"]) == {"a@x.org": 2, "c@x.org": 1}
    assert dict(net.adjacency["lonely@x.org"]) == {}
    assert len(net) == 4


@pytest.mark.parametrize("suffix", [".graphml", ".csv", ".json"])
def test_round_trip(tmp_path, suffix):
    net = _net(source="fixture")
    path = tmp_path / f"net{suffix}"
    save_network(net, path)
    back = load_network(path)
    assert back.kind is NetworkKind.ATTACHMENT
    assert dict(back.edges) == dict(net.edges)
    assert dict(back.meta) == {"source": "fixture"}
    if suffix != ".csv":
        # an edge list cannot carry isolated nodes
        assert back == net


def test_unsupported_format(tmp_path):
    with pytest.raises(ValueError):
        save_network(_net(), tmp_path / "net.txt")
    (tmp_path / "net.txt").write_text("x")
    with pytest.raises(InputError):
        load_network(tmp_path / "net.txt")


def test_missing_file(tmp_path):
    with pytest.raises(InputError):
        load_network(tmp_path / "absent.graphml")


def test_to_networkx():
    g = _net().to_networkx()
    assert g["a@x.org"]["b@x.org"]["weight"] == 2
    assert g.number_of_nodes() == 4
