import itertools
import math

import numpy as np
import pytest

from cluster_bell.analysis import (
    BellExpression,
    EnumerationCapError,
    builtin_expression,
    evaluate,
    fidelity,
    full_report,
    lhv_bound,
    prediction_probabilities,
    prediction_probability,
    quantum_max,
    witness,
)
from cluster_bell.data_io import IncompleteTableError, MeasurementTable, load_builtin
from cluster_bell.graphs import all_subsets, builtin_graph, generators, stabilizer_group
from cluster_bell.pauli import PauliString
from cluster_bell.sim import NoiseSpec, QuantumState, apply_noise, partial_trace

from conftest import dense, random_density


def brute_lhv(strings):
    """Reference max over explicit +-1 dictionaries, one per (qubit, letter)."""
    obs = sorted({(q, p.letter(q)) for p in strings for q in p.support})
    best = 0
    for values in itertools.product((1, -1), repeat=len(obs)):
        v = dict(zip(obs, values))
        total = sum(p.sign * math.prod(v[(q, p.letter(q))] for q in p.support) for p in strings)
        best = max(best, abs(total))
    return best


@pytest.fixture(scope="module")
def table1():
    return load_builtin("table1")


def full_table(value=1.0, sigma=0.0):
    t = MeasurementTable()
    for s in all_subsets(6):
        t.add(s, 1.0 if not s else value, 0.0 if not s else sigma)
    return t


class TestExpressions:
    def test_term_counts(self):
        assert len(builtin_expression("B").terms) == 16
        assert len(builtin_expression("beta").terms) == 4
        assert len(builtin_expression("betaprime").terms) == 4

    def test_b_terms(self):
        terms = set(builtin_expression("B").terms)
        expected = {tuple(sorted((1, 6) + t)) for r in range(5)
                    for t in itertools.combinations((2, 3, 4, 5), r)}
        assert terms == expected

    def test_terms_match_dataset_checkmarks(self, table1):
        for name in ("B", "beta", "betaprime"):
            assert set(builtin_expression(name).terms) == table1.flagged(name)

    def test_stated_bounds(self):
        assert [builtin_expression(n).lhv_bound for n in ("B", "beta", "betaprime")] == [4, 2, 2]

    def test_unknown(self):
        with pytest.raises(ValueError):
            builtin_expression("CHSH")


class TestFidelityWitness:
    def test_table1(self, table1):
        f, s = fidelity(table1)
        assert f == pytest.approx(0.6350, abs=5e-5)
        assert s == pytest.approx(0.0008, abs=1e-4)

    def test_all_ones(self):
        assert fidelity(full_table()) == (1.0, 0.0)

    def test_missing_subsets_listed(self):
        t = full_table()
        del t.records[(1, 2)], t.records[(3,)]
        with pytest.raises(IncompleteTableError) as exc:
            fidelity(t)
        assert exc.value.missing == [(3,), (1, 2)]
        assert "g1*g2" in str(exc.value)

    @pytest.mark.parametrize("p", [0.0, 0.3, 0.8])
    def test_white_noise_state(self, lc6_tilde, p):
        f, s = fidelity(apply_noise(lc6_tilde, NoiseSpec(p)))
        assert f == pytest.approx((1 + 63 * p) / 64, abs=1e-12)
        assert s == 0

    def test_matches_overlap_on_random_states(self, lc6_tilde):
        rng = np.random.default_rng(21)
        psi = lc6_tilde.data
        for rank in (1, 3, 64):
            rho = random_density(6, rng, rank)
            f, _ = fidelity(QuantumState(rho))
            assert f == pytest.approx(np.vdot(psi, rho @ psi).real, abs=1e-10)

    def test_witness_examples(self):
        value, sigma = witness((0.6350, 0.0008))
        assert value == pytest.approx(-0.270)
        assert sigma == pytest.approx(0.0016)
        assert witness((0.5, 0.0))[0] == 0
        assert witness((1.0, 0.0))[0] == -1


class TestEvaluate:
    def test_beta_table1(self, table1):
        v, s = evaluate(builtin_expression("beta"), table1)
        assert v == pytest.approx(0.5928 + 0.5657 + 0.5602 + 0.6063, abs=1e-12)
        assert v == pytest.approx(2.3250, abs=1e-4)
        assert s == pytest.approx(0.0143, abs=1e-4)

    def test_betaprime_table1(self, table1):
        v, s = evaluate(builtin_expression("betaprime"), table1)
        assert v == pytest.approx(2.8811, abs=1e-4)
        assert s == pytest.approx(0.0115, abs=1e-4)

    def test_b_table1(self, table1):
        v, s = evaluate(builtin_expression("B"), table1)
        assert v == pytest.approx(6.9874, abs=1e-4)
        assert s == pytest.approx(0.028, abs=5e-4)

    def test_ideal_state(self, lc6_tilde):
        assert evaluate(builtin_expression("B"), lc6_tilde) == (pytest.approx(16), 0.0)

    def test_missing_term(self, table1):
        t = MeasurementTable(records={k: v for k, v in table1.records.items() if k != (1, 2, 4)})
        with pytest.raises(IncompleteTableError):
            evaluate(builtin_expression("beta"), t)

    def test_absolute_value_of_sum(self):
        t = full_table(value=-0.5, sigma=0.01)
        v, _ = evaluate(builtin_expression("beta"), t)
        assert v == pytest.approx(2.0)

    @pytest.mark.parametrize("p", [0.0, 0.25, 0.5, 1.0])
    def test_white_noise_linear(self, lc6_tilde, p):
        v, _ = evaluate(builtin_expression("B"), apply_noise(lc6_tilde, NoiseSpec(p)))
        assert v == pytest.approx(16 * p, abs=1e-10)


class TestLHV:
    @pytest.mark.parametrize("name,bound", [("B", 4), ("beta", 2), ("betaprime", 2)])
    def test_builtin(self, name, bound):
        expr = builtin_expression(name)
        assert lhv_bound(expr) == bound
        assert brute_lhv(expr.strings()) == bound

    def test_single_term(self):
        assert lhv_bound(BellExpression("g4", ((4,),))) == 1

    def test_chunking_does_not_change_result(self):
        assert lhv_bound(builtin_expression("B"), chunk=37) == 4

    def test_cap(self):
        strings = [PauliString.from_sparse(12, {q: c}) for q in range(1, 13) for c in "XYZ"]
        n = len(strings)
        stabs_like = {(i,): p for i, p in enumerate(strings, start=1)}

        class Fake:
            def __getitem__(self, k):
                return stabs_like[k]

        expr = BellExpression("big", tuple((i,) for i in range(1, n + 1)), stabilizers=Fake())
        with pytest.raises(EnumerationCapError):
            lhv_bound(expr)

    def test_relabel_invariance(self):
        base = builtin_expression("B")
        perm = [3, 1, 2, 6, 4, 5]
        relabelled = [PauliString.from_sparse(6, {perm[q - 1]: p.letter(q) for q in p.support}, p.sign)
                      for p in base.strings()]
        assert brute_lhv(relabelled) == lhv_bound(base)

    def test_sign_flip_invariance(self):
        base = builtin_expression("beta").strings()
        # flipping the sign of every term containing X1 is an assignment relabelling
        flipped = [-p if p.letter(1) == "X" else p for p in base]
        assert brute_lhv(flipped) == brute_lhv(base)

    def test_random_expressions_agree_with_brute_force(self):
        rng = np.random.default_rng(5)
        gens = generators(builtin_graph("LC6"))
        stabs = stabilizer_group(gens)
        keys = [k for k in stabs if k]
        for _ in range(10):
            chosen = tuple(keys[i] for i in rng.choice(len(keys), size=5, replace=False))
            expr = BellExpression("r", chosen, stabilizers=stabs)
            assert lhv_bound(expr) == brute_lhv(expr.strings())


class TestQuantumMax:
    @pytest.mark.parametrize("name,value", [("B", 16), ("beta", 4), ("betaprime", 4)])
    def test_builtin(self, name, value):
        assert quantum_max(builtin_expression(name)) == pytest.approx(value)

    def test_single_term(self):
        assert quantum_max(BellExpression("g1", ((1,),))) == pytest.approx(1)

    def test_sandwich_on_random_states(self):
        rng = np.random.default_rng(8)
        for name in ("B", "beta", "betaprime"):
            expr = builtin_expression(name)
            qmax = quantum_max(expr)
            op = sum(dense(p) for p in expr.strings())
            for _ in range(5):
                rho = random_density(6, rng, rank=2)
                raw = np.trace(rho @ op).real
                assert -qmax - 1e-9 <= raw <= qmax + 1e-9
                assert evaluate(expr, QuantumState(rho))[0] <= qmax + 1e-9


class TestPrediction:
    @pytest.mark.parametrize("e,prob", [(1, 1), (0.88, 0.94), (0.56, 0.78), (-0.56, 0.78), (0, 0.5)])
    def test_values(self, e, prob):
        assert prediction_probability(e) == pytest.approx(prob)

    def test_out_of_range(self):
        with pytest.raises(ValueError):
            prediction_probability(1.2)

    def test_table1_range(self, table1):
        preds = prediction_probabilities(builtin_expression("B"), table1)
        probs = [p for p, _ in preds.values()]
        assert min(probs) == pytest.approx(0.7801, abs=1e-4)
        assert max(probs) == pytest.approx(0.9394, abs=1e-4)
        # every single-qubit observable of B has a remote predictor
        assert len(preds) == 14
        assert preds[(3, "X")][1] == (6,)

    def test_ideal_state_predicts_perfectly(self, lc6_tilde):
        preds = prediction_probabilities(builtin_expression("B"), lc6_tilde)
        assert all(p == pytest.approx(1) for p, _ in preds.values())


class TestFullReport:
    def test_table1_significance(self, table1):
        from cluster_bell.data_io import PUBLISHED_TABLE1
        r = full_report(table1, reference=PUBLISHED_TABLE1)
        assert r.witness_sigmas > 130
        assert r.expression("beta").violation_sigmas == pytest.approx(22.8, abs=0.1)
        assert r.expression("betaprime").violation_sigmas == pytest.approx(76.7, abs=0.1)
        assert any(n.startswith("B:") for n in r.notes)
        assert len(r.notes) == 1
        assert r.comparison["B"]["delta_sigmas"] == pytest.approx(-1.09, abs=0.01)

    def test_ideal(self, lc6_tilde):
        r = full_report(lc6_tilde)
        assert r.fidelity == (pytest.approx(1), 0.0)
        assert r.witness[0] == pytest.approx(-1)
        assert r.expression("B").value == pytest.approx(16)
        assert r.expression("B").degree == pytest.approx(4)
        assert r.expression("B").violation_sigmas is None

    def test_white_noise_no_violation(self, lc6_tilde):
        r = full_report(apply_noise(lc6_tilde, NoiseSpec(0.2)))
        assert r.expression("B").value == pytest.approx(3.2)
        assert not r.expression("B").violated

    def test_thresholds(self, lc6_tilde):
        for p in (0.24, 0.26):
            b = evaluate(builtin_expression("B"), apply_noise(lc6_tilde, NoiseSpec(p)))[0]
            assert (b > 4) == (p > 0.25)
        for p in (0.49, 0.495):
            w = witness(fidelity(apply_noise(lc6_tilde, NoiseSpec(p))))[0]
            assert (w < 0) == (p > 31 / 63)

    def test_persistency(self, lc6_tilde):
        assert evaluate(builtin_expression("beta"), partial_trace(lc6_tilde, {3, 6}))[0] == pytest.approx(4)
        assert evaluate(builtin_expression("betaprime"), partial_trace(lc6_tilde, {1, 4}))[0] == pytest.approx(4)
