"""Generators: lattice boxes, three-rail, lamplighter, perturbations."""

import numpy as np
import pytest

from harnack_lab import PreconditionError, generators, graph
from harnack_lab.generators import (LampState, lamp_distance,
                                    lamp_distance_paper_form, lamp_neighbors,
                                    lamplighter_ball, lattice_box,
                                    perturb_weights, three_rail)
from harnack_lab.graph import ball, bfs_distances


class TestLatticeBox:
    def test_path_counts(self):
        g = lattice_box(1, 3)
        assert g.n == 7
        assert sum(1 for _ in g.edges()) == 6

    def test_small_square(self):
        g = lattice_box(2, 1)
        assert g.n == 9
        assert sum(1 for _ in g.edges()) == 12

    def test_ball_count_inside_box(self):
        g = lattice_box(2, 10)
        assert len(ball(g, g.index((0, 0)), 5)) == 61

    def test_dimension_guard(self):
        with pytest.raises(PreconditionError):
            lattice_box(4, 2)

    def test_size_guard(self):
        with pytest.raises(PreconditionError):
            lattice_box(3, 100)

    def test_halo_is_outer_shell(self):
        g = lattice_box(2, 3)
        assert all(max(abs(c) for c in g.labels[i]) == 3 for i in g.halo)


class TestThreeRail:
    def test_column_edge_weights(self):
        g = three_rail(10)
        assert g.edge_weight(g.index((3, 1)), g.index((3, 2))) == 0.125
        assert g.edge_weight(g.index((-3, 1)), g.index((-3, 2))) == 0.125
        assert g.edge_weight(g.index((4, 0)), g.index((5, 0))) == 1.0

    def test_origin_measure_by_incident_scan(self):
        g = three_rail(10)
        x = g.index((0, 0))
        incident = [g.weights[k] for k in range(g.indptr[x], g.indptr[x + 1])]
        assert sorted(incident) == [1.0, 1.0, 1.0, 1.0]
        assert g.mu[x] == 4.0

    def test_controlled_weights_collapse(self):
        p10 = graph.controlled_weights_p0(three_rail(10))
        p20 = graph.controlled_weights_p0(three_rail(20))
        assert p20 < p10 < 2.0 ** -8

    def test_halo_margin(self):
        g = three_rail(10)
        assert all(abs(g.labels[i][0]) >= 9 for i in g.halo)


class TestLamplighter:
    def test_degree_four_inside(self):
        g, base = lamplighter_ball(4)
        dist = bfs_distances(g, base)
        for v in range(g.n):
            if dist[v] <= 4:  # full neighbor sets survive the truncation
                assert len(g.neighbors(v)) == 4

    def test_base_distance_zero(self):
        g, base = lamplighter_ball(3)
        assert g.labels[base] == LampState(0, frozenset())
        assert lamp_distance(LampState(0, frozenset())) == 0

    def test_bfs_matches_closed_form(self):
        g, base = lamplighter_ball(8)
        dist = bfs_distances(g, base)
        for v in range(g.n):
            assert dist[v] == lamp_distance(g.labels[v])

    def test_paper_form_on_its_domain(self):
        # 2a + b + |b - x'| whenever a, b >= 0, x' >= 0 and x' != b
        g, base = lamplighter_ball(8)
        dist = bfs_distances(g, base)
        checked = 0
        for v in range(g.n):
            s = g.labels[v]
            if not s.lamps or s.position < 0:
                continue
            if min(s.lamps) > 0 or max(s.lamps) < 0 or s.position == max(s.lamps):
                continue
            assert lamp_distance_paper_form(s.position, s.lamps) == dist[v]
            checked += 1
        assert checked > 300

    def test_antisymmetric_pair_distance(self):
        # lamps [-R,0] at -R: the sweep must revisit the far lamp, cost R + 2
        g, base = lamplighter_ball(8)
        dist = bfs_distances(g, base)
        for r in (1, 2, 3, 4):
            y1 = LampState(-r, frozenset(range(-r, 1)))
            y2 = LampState(r, frozenset(range(0, r + 1)))
            assert dist[g.index(y1)] == r + 2
            assert dist[g.index(y2)] == r + 2
            assert lamp_distance(y1) == r + 2

    def test_neighbors_are_symmetric(self):
        s = LampState(2, frozenset({0, 2}))
        for t in lamp_neighbors(s):
            assert s in lamp_neighbors(t)

    def test_state_guard(self, monkeypatch):
        monkeypatch.setattr(generators, "MAX_LAMP_STATES", 50)
        with pytest.raises(PreconditionError):
            lamplighter_ball(6)

    def test_halo_is_outer_shell(self):
        g, base = lamplighter_ball(3)
        dist = bfs_distances(g, base)
        assert set(g.halo) == {v for v in range(g.n) if dist[v] == 4}


class TestPerturbWeights:
    def test_identity_factors(self):
        g = lattice_box(1, 5)
        g2 = perturb_weights(g, {}, c1=2.0)
        assert np.array_equal(g2.weights, g.weights)
        assert g2.labels == g.labels

    def test_out_of_band_rejected(self):
        g = lattice_box(1, 5)
        some_edge = next(iter(g.edges()))[:2]
        with pytest.raises(PreconditionError):
            perturb_weights(g, {some_edge: 3.0}, c1=2.0)

    def test_indexing_preserved(self):
        g = lattice_box(2, 3)
        factors = {(u, v): 2.0 if (u + v) % 2 else 0.5 for u, v, _ in g.edges()}
        g2 = perturb_weights(g, factors, c1=2.0)
        assert g2.labels == g.labels
        assert g2.halo == g.halo
        for u, v, w in g.edges():
            assert g2.edge_weight(u, v) == w * factors[(u, v)]

    def test_alternating_factors_bound_dumbbell_shift(self):
        # conductances scale inside [1/2, 2], so the survey ratio moves by <= 4
        from harnack_lab.conductance import dumbbell_ratio
        g = lattice_box(1, 30)
        x0 = g.index((0,))
        base = dumbbell_ratio(g, x0, 10)
        factors = {(u, v): (0.5 if u % 2 else 2.0) for u, v, _ in g.edges()}
        pert = dumbbell_ratio(perturb_weights(g, factors, c1=2.0), x0, 10)
        assert pert["ratio"] <= 4.0 * base["ratio"] + 1e-9
        assert base["ratio"] <= 4.0 * pert["ratio"] + 1e-9
