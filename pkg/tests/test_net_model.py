import numpy as np
import pytest

from flowmon import (
    ConfigError,
    RoutingMatrix,
    flows_on_link,
    link_loads,
    links_of_flow,
    load_routing_csv,
    save_routing_csv,
    synthetic_topology,
)


class TestRoutingMatrix:
    def test_accepts_binary_matrix(self):
        r = RoutingMatrix(np.array([[1, 0], [0, 1], [1, 1]]))
        assert r.n_links == 3
        assert r.n_flows == 2

    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            RoutingMatrix(np.zeros((0, 3)))

    def test_rejects_one_dimensional(self):
        with pytest.raises(ValueError):
            RoutingMatrix(np.array([1, 0, 1]))

    def test_rejects_non_binary_entries(self):
        with pytest.raises(ValueError):
            RoutingMatrix(np.array([[1, 2], [0, 1]]))

    def test_rejects_flow_with_no_links(self):
        with pytest.raises(ValueError, match="flow 1"):
            RoutingMatrix(np.array([[1, 0], [1, 0]]))

    def test_allows_empty_link(self):
        r = RoutingMatrix(np.array([[1], [0]]))
        assert flows_on_link(r, 1) == set()

    def test_entries_are_read_only(self):
        r = RoutingMatrix(np.array([[1, 1]]))
        with pytest.raises(ValueError):
            r.entries[0, 0] = 0


class TestIncidenceQueries:
    def test_links_of_flow(self, shared_link_routing):
        assert links_of_flow(shared_link_routing, 0) == {0, 1}
        assert links_of_flow(shared_link_routing, 1) == {0}
        assert links_of_flow(shared_link_routing, 2) == {1}

    def test_flows_on_link(self, shared_link_routing):
        assert flows_on_link(shared_link_routing, 0) == {0, 1}
        assert flows_on_link(shared_link_routing, 1) == {0, 2}

    def test_index_bounds(self, shared_link_routing):
        with pytest.raises(ValueError):
            links_of_flow(shared_link_routing, 3)
        with pytest.raises(ValueError):
            links_of_flow(shared_link_routing, -1)
        with pytest.raises(ValueError):
            flows_on_link(shared_link_routing, 2)


class TestLinkLoads:
    def test_matches_matrix_product(self, shared_link_routing):
        x = np.array([5.0, 7.0, 11.0])
        np.testing.assert_allclose(
            link_loads(shared_link_routing, x), [12.0, 16.0]
        )

    def test_rejects_negative_volume(self, shared_link_routing):
        with pytest.raises(ValueError):
            link_loads(shared_link_routing, [1.0, -1.0, 1.0])

    def test_rejects_wrong_length(self, shared_link_routing):
        with pytest.raises(ValueError):
            link_loads(shared_link_routing, [1.0, 2.0])


class TestSyntheticTopology:
    def test_default_dimensions(self):
        r = synthetic_topology()
        assert r.entries.shape == (26, 72)

    def test_every_flow_routed(self):
        r = synthetic_topology()
        assert (r.entries.sum(axis=0) >= 1).all()

    def test_directed_link_pairs_balanced(self):
        # links come in opposite-direction pairs (2k, 2k+1); with all
        # ordered node pairs routed, each direction carries some flow
        r = synthetic_topology()
        used = r.entries.sum(axis=1)
        assert (used > 0).all()

    def test_deterministic_in_seed(self):
        a = synthetic_topology(seed=3)
        b = synthetic_topology(seed=3)
        c = synthetic_topology(seed=4)
        assert np.array_equal(a.entries, b.entries)
        assert not np.array_equal(a.entries, c.entries)

    def test_small_network(self):
        r = synthetic_topology(n_nodes=3, n_links=4, n_flows=4, seed=0)
        assert r.entries.shape == (4, 4)

    def test_rejects_odd_link_count(self):
        with pytest.raises(ValueError):
            synthetic_topology(n_nodes=3, n_links=5, n_flows=2)

    def test_rejects_too_few_links_for_tree(self):
        with pytest.raises(ValueError):
            synthetic_topology(n_nodes=9, n_links=14, n_flows=10)

    def test_rejects_too_many_flows(self):
        with pytest.raises(ValueError):
            synthetic_topology(n_nodes=3, n_links=6, n_flows=7)

    def test_paths_are_contiguous_loads(self):
        # a unit of traffic on one flow loads exactly the links of its path
        r = synthetic_topology(n_nodes=5, n_links=12, n_flows=20, seed=1)
        for j in range(r.n_flows):
            x = np.zeros(r.n_flows)
            x[j] = 1.0
            y = link_loads(r, x)
            assert set(np.flatnonzero(y)) == links_of_flow(r, j)


class TestRoutingCsv:
    def test_round_trip(self, tmp_path):
        r = synthetic_topology(n_nodes=4, n_links=8, n_flows=6, seed=2)
        path = tmp_path / "routing.csv"
        save_routing_csv(r, path)
        back = load_routing_csv(path)
        assert np.array_equal(back.entries, r.entries)

    def test_rejects_bad_header(self, tmp_path):
        path = tmp_path / "routing.csv"
        path.write_text("link,flow_1,flow_0\n0,1,1\n")
        with pytest.raises(ConfigError):
            load_routing_csv(path)

    def test_rejects_non_binary_cell(self, tmp_path):
        path = tmp_path / "routing.csv"
        path.write_text("link,flow_0\n0,2\n")
        with pytest.raises(ConfigError):
            load_routing_csv(path)

    def test_rejects_short_row(self, tmp_path):
        path = tmp_path / "routing.csv"
        path.write_text("link,flow_0,flow_1\n0,1\n")
        with pytest.raises(ConfigError):
            load_routing_csv(path)

    def test_rejects_empty_file(self, tmp_path):
        path = tmp_path / "routing.csv"
        path.write_text("")
        with pytest.raises(ConfigError):
            load_routing_csv(path)

    def test_rejects_unrouted_flow(self, tmp_path):
        path = tmp_path / "routing.csv"
        path.write_text("link,flow_0,flow_1\n0,1,0\n1,1,0\n")
        with pytest.raises(ConfigError):
            load_routing_csv(path)
