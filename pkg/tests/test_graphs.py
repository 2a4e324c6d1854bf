import random

import numpy as np
import pytest

from cluster_bell.graphs import (
    GraphError,
    GraphSpec,
    all_subsets,
    builtin_graph,
    generators,
    parse_subset,
    stabilizer_group,
    subset_key,
    tilde_frame,
)
from cluster_bell.pauli import PauliString, multiply
from cluster_bell.sim import expectation

from conftest import dense


def P(text):
    return PauliString.parse(text, 6)


class TestGraphSpec:
    def test_rejects_self_loop(self):
        with pytest.raises(GraphError):
            GraphSpec.from_edges(3, [(1, 1)])

    def test_rejects_duplicate(self):
        with pytest.raises(GraphError):
            GraphSpec.from_edges(3, [(1, 2), (2, 1)])

    def test_rejects_out_of_range(self):
        with pytest.raises(GraphError):
            GraphSpec.from_edges(3, [(1, 4)])

    def test_edge_list_round_trip(self):
        g = builtin_graph("LC6")
        text = g.to_text()
        assert text.splitlines()[0] == "n=6"
        assert GraphSpec.from_text(text) == g

    @pytest.mark.parametrize("text", ["", "1 2\n", "n=3\n1\n", "n=3\n1 x\n"])
    def test_bad_edge_list(self, text):
        with pytest.raises(GraphError):
            GraphSpec.from_text(text)


class TestBuiltins:
    def test_lc6_edges(self):
        g = builtin_graph("LC6")
        assert g.edges == {(1, 4), (1, 2), (2, 5), (5, 6), (3, 6)}

    def test_he6_is_matching(self):
        assert builtin_graph("he6").edges == {(1, 4), (2, 5), (3, 6)}

    def test_lc6_degrees(self):
        assert builtin_graph("LC6").degrees() == (2, 2, 1, 1, 2, 2)

    def test_lc6_is_path_4_1_2_5_6_3(self):
        g = builtin_graph("LC6")
        path = [4, 1, 2, 5, 6, 3]
        assert g.edges == {tuple(sorted(e)) for e in zip(path, path[1:])}

    def test_unknown(self):
        with pytest.raises(GraphError):
            builtin_graph("GHZ6")


class TestGenerators:
    def test_lc6(self):
        gens = generators(builtin_graph("LC6"))
        assert gens[0] == P("X1Z2Z4")
        assert gens[3] == P("Z1X4")

    def test_single_vertex(self):
        assert generators(GraphSpec(1)) == [PauliString.parse("X1", 1)]

    def test_eigenvalue_on_lc6(self, lc6_tilde):
        from cluster_bell.sim import build_graph_state
        s = build_graph_state(builtin_graph("LC6"))
        for g in generators(builtin_graph("LC6")):
            assert expectation(s, g) == pytest.approx(1, abs=1e-10)


class TestTildeFrame:
    @pytest.mark.parametrize("plain,tilde", [
        ("Z1X2Z5", "Z1Z2Z5"),
        ("Z2X5Z6", "-X2X5Z6"),
        ("X1Z2Z4", "X1X2X4"),
        ("X3Z6", "-Z3Z6"),
        ("Z1X4", "Z1Z4"),
        ("Z3Z5X6", "X3Z5X6"),
    ])
    def test_generators(self, plain, tilde):
        from cluster_bell.pauli import apply_frame
        assert apply_frame(P(plain), tilde_frame()) == P(tilde)

    def test_frames_only_on_2_to_5(self):
        assert sorted(tilde_frame()) == [2, 3, 4, 5]


class TestStabilizerGroup:
    def test_size_and_identity(self, stabs):
        assert len(stabs) == 64
        assert stabs[()] == PauliString.identity(6)
        assert stabs["g3"] == P("-Z3Z6")

    def test_g1_g6(self, stabs):
        assert stabs["g1*g6"] == multiply(stabs["g1"], stabs["g6"])

    def test_empty(self):
        s = stabilizer_group([])
        assert list(s.items()) == [((), PauliString.identity(1))]

    def test_all_hermitian_and_commuting(self, stabs):
        from cluster_bell.pauli import commutes
        elems = [p for _, p in stabs.items()]
        assert all(p.is_hermitian for p in elems)
        assert all(commutes(a, b) for a in elems for b in elems)

    def test_closure(self, stabs):
        rng = random.Random(7)
        keys = list(stabs)
        for _ in range(200):
            a, b = rng.choice(keys), rng.choice(keys)
            sym = tuple(sorted(set(a) ^ set(b)))
            assert stabs[a] * stabs[b] == stabs[sym]

    def test_independent(self, stabs):
        assert all(not p.is_identity for s, p in stabs.items() if s)

    def test_rejects_noncommuting(self):
        with pytest.raises(GraphError):
            stabilizer_group([PauliString.parse("X1", 2), PauliString.parse("Z1", 2)])

    def test_rejects_dependent(self):
        with pytest.raises(GraphError):
            stabilizer_group([PauliString.parse("Z1", 2), PauliString.parse("Z2", 2),
                              PauliString.parse("Z1Z2", 2)])

    def test_every_element_stabilizes_lab_state(self, stabs, lc6_tilde):
        for s, p in stabs.items():
            assert expectation(lc6_tilde, p) == pytest.approx(1, abs=1e-10), subset_key(s)

    def test_projector_identity(self, stabs, lc6_tilde):
        proj = sum(dense(p) for _, p in stabs.items()) / 64
        psi = lc6_tilde.data
        assert np.abs(proj - np.outer(psi, psi.conj())).max() < 1e-10

    def test_he6_tilde_frame_stabilizes_hyperentangled_state(self, he6_tilde):
        he = stabilizer_group(generators(builtin_graph("HE6")), tilde_frame())
        for _, p in he.items():
            assert expectation(he6_tilde, p) == pytest.approx(1, abs=1e-10)


class TestSubsetKeys:
    def test_round_trip(self):
        for s in all_subsets(6):
            assert parse_subset(subset_key(s)) == s

    def test_identity_key(self):
        assert subset_key(()) == "I"
        assert parse_subset("g6*g1") == (1, 6)

    @pytest.mark.parametrize("bad", ["g0", "h1", "g1*g1", "g1**g2", ""])
    def test_rejects(self, bad):
        with pytest.raises(GraphError):
            parse_subset(bad)
