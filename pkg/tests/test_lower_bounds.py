import io
import itertools
import json
from math import comb

import numpy as np
import pytest

from ndcoreset.data import parse_sparse_lines
from ndcoreset.lower_bounds import (
    all_collapses,
    coreset_failure_sweep,
    demonstrate_collapse,
    expected_n,
    f1_full_score_closed_form,
    gen_f1_instance,
    gen_mcc_instance,
    mcc_x_signs,
)
from ndcoreset.metrics import mcc_numerator, table_from_predictions


def dot_matrix(inst):
    W = np.stack([q.weights for q in inst.matched_queries], axis=1)
    return inst.data.X @ W  # column p = values under w_p


class TestF1Instance:
    def test_d2(self):
        inst = gen_f1_instance(2)
        assert inst.n == 2 and inst.data.dim == 3

    @pytest.mark.parametrize("d", [2, 4, 6, 8])
    def test_subsets(self, d):
        inst = gen_f1_instance(d)
        assert inst.n == comb(d, d // 2) == expected_n(d)
        assert len(set(inst.subsets)) == inst.n
        assert all(len(B) == d // 2 for B in inst.subsets)

    @pytest.mark.parametrize("rule", ["all_positive", "alternating"])
    def test_margins_d4(self, rule):
        inst = gen_f1_instance(4, rule)
        V, y = dot_matrix(inst), inst.data.y
        assert inst.n == 6
        for p in range(6):
            assert V[p, p] == y[p] / 2
            for q in range(6):
                if q != p:
                    assert abs(V[q, p]) >= 0.5 and np.sign(V[q, p]) == -y[q]

    def test_coordinates(self):
        inst = gen_f1_instance(4, "alternating")
        for i, B in enumerate(inst.subsets):
            x, yp = inst.data.X[i], inst.data.y[i]
            assert all(x[j] == (-yp if j in B else 0) for j in range(4))
            assert x[4] == yp / 2
            w = inst.matched_queries[i].weights
            assert all(w[j] == (0 if j in B else 1) for j in range(4)) and w[4] == 1

    @pytest.mark.parametrize("d", [0, 3, 18])
    def test_bad_d(self, d):
        with pytest.raises(ValueError):
            gen_f1_instance(d)

    def test_bad_rule(self):
        with pytest.raises(ValueError):
            gen_f1_instance(4, "random")


class TestF1Collapse:
    @pytest.mark.parametrize("d", [2, 4, 6, 8])
    def test_every_positive_collapses(self, d):
        inst = gen_f1_instance(d)
        for rec in all_collapses(inst):
            t = rec.full_table
            assert t.tp == 1 and t.fp + t.fn == inst.n - 1
            assert rec.full_score == pytest.approx(1 / (1 + (t.fp + t.fn) / 2), abs=0)
            assert rec.full_score == f1_full_score_closed_form(inst, rec.index)
            assert rec.omitted_table.tp == 0 and rec.omitted_score == 0.0

    def test_d4_value(self):
        rec = demonstrate_collapse(gen_f1_instance(4), 0)
        # tp = 1, fn = 5: 1 / (1 + 5/2)
        assert rec.full_score == pytest.approx(2 / 7)

    def test_alternating_positive_only(self):
        inst = gen_f1_instance(4, "alternating")
        assert inst.matched_indices() == [0, 2, 4]
        with pytest.raises(ValueError):
            demonstrate_collapse(inst, 1)
        for rec in all_collapses(inst):
            assert rec.full_score > 0 and rec.omitted_score == 0.0

    def test_omit_out_of_range(self):
        with pytest.raises(IndexError):
            demonstrate_collapse(gen_f1_instance(2), 5)


class TestMccInstance:
    def test_d4_counts(self):
        inst = gen_mcc_instance(4)
        assert inst.n == 6 and inst.data.n_pos == inst.data.n_neg == 3

    @pytest.mark.parametrize("d", [4, 6, 8])
    def test_margins(self, d):
        inst = gen_mcc_instance(d)
        V, y, xs = dot_matrix(inst), inst.data.y, inst.x_signs
        assert np.all(np.diag(V) == y / 2)
        off = ~np.eye(inst.n, dtype=bool)
        assert np.all(np.abs(V[off]) >= 0.5)
        assert np.all(np.sign(V) [off] == np.broadcast_to(xs[:, None], V.shape)[off])

    def test_half_rule(self):
        y = np.array([1, 1, 1, -1, -1, -1], dtype=np.int8)
        np.testing.assert_array_equal(mcc_x_signs(y), [1, -1, -1, -1, 1, 1])
        y = np.array([1] * 10 + [-1] * 10, dtype=np.int8)
        xs = mcc_x_signs(y)
        assert (xs[:10] == 1).sum() == 5 and (xs[10:] == -1).sum() == 5

    def test_d_too_small(self):
        with pytest.raises(ValueError):
            gen_mcc_instance(2)

    def test_bad_rule(self):
        with pytest.raises(ValueError):
            mcc_x_signs(np.array([1, -1]), "quarter")


class TestMccCollapseEnumerated:
    """Exact values of the MCC construction as specified (first half of each class gets X = y)."""

    EXPECTED = {
        4: {(0.0, -1.0): 4, (-3.0, -4.0): 2},
        6: {(0.0, -5.0): 10, (10.0, 5.0): 10},
        8: {(0.0, -17.0): 36, (-35.0, -52.0): 34},
    }

    @pytest.mark.parametrize("d", [4, 6, 8])
    def test_numerators(self, d):
        recs = all_collapses(gen_mcc_instance(d))
        seen = {}
        for r in recs:
            key = (r.full_numerator, r.omitted_numerator)
            seen[key] = seen.get(key, 0) + 1
            assert r.full_numerator == mcc_numerator(r.full_table)
        assert seen == self.EXPECTED[d]

    @pytest.mark.parametrize("d", [4, 6, 8])
    def test_omitted_numerator_never_zero(self, d):
        assert all(r.omitted_numerator != 0 for r in all_collapses(gen_mcc_instance(d)))

    def test_all_negative_rule(self):
        # X = -1 everywhere: positive points collapse, negative points start at score 0
        inst = gen_mcc_instance(4, x_rule="all_negative")
        for r in all_collapses(inst):
            if r.label == 1:
                assert r.omitted_numerator == 0 and r.full_score > 0
            else:
                assert r.full_numerator == 0 and r.full_score == 0.0


def test_no_sign_assignment_collapses_every_point():
    """At n = 6 no labeling with 3 positives and no choice of X signs works for all p.

    Under w_p the matched point is predicted y_p and every other point q is
    predicted sign(X_q), which is all the collapse argument depends on.
    """
    n = 6
    for pos in itertools.combinations(range(n), n // 2):
        y = -np.ones(n, dtype=np.int8)
        y[list(pos)] = 1
        for xs in itertools.product((1, -1), repeat=n):
            xs = np.array(xs, dtype=np.int8)
            ok = True
            for p in range(n):
                pred = xs.copy()
                pred[p] = y[p]
                keep = np.arange(n) != p
                full = table_from_predictions(y, pred)
                if mcc_numerator(full) <= 0 or mcc_numerator(table_from_predictions(y[keep], pred[keep])) != 0:
                    ok = False
                    break
            assert not ok


class TestSweep:
    def test_m_n_minus_one(self):
        inst = gen_f1_instance(6)
        rep = coreset_failure_sweep(inst, "uniform-noreplace", inst.n - 1, trials=10, seed=0)
        assert rep["collapses_per_trial"] == [1] * 10

    def test_m_half(self):
        inst = gen_f1_instance(6)
        rep = coreset_failure_sweep(inst, "uniform-noreplace", inst.n // 2, trials=10, seed=0)
        assert all(c >= inst.n // 2 for c in rep["collapses_per_trial"])

    @pytest.mark.parametrize("strategy", ["uniform", "leverage", "kmeans", "uniform-noreplace"])
    def test_exhaustive_no_collapse(self, strategy):
        inst = gen_f1_instance(4)
        rep = coreset_failure_sweep(inst, strategy, inst.n, trials=3, seed=0, exhaustive=True)
        assert rep["collapse_fraction"] == 0.0

    def test_with_replacement_strategies_collapse(self):
        inst = gen_f1_instance(6)
        for s in ("uniform", "leverage", "kmeans"):
            rep = coreset_failure_sweep(inst, s, inst.n // 2, trials=5, seed=1)
            assert min(rep["collapses_per_trial"]) >= inst.n // 2

    def test_m_too_large(self):
        inst = gen_f1_instance(4)
        with pytest.raises(ValueError):
            coreset_failure_sweep(inst, "uniform", inst.n, trials=1, seed=0)


def test_export_roundtrip():
    inst = gen_mcc_instance(4)
    data_fh, side_fh = io.StringIO(), io.StringIO()
    inst.export(data_fh, side_fh)
    back = parse_sparse_lines(data_fh.getvalue().splitlines())
    np.testing.assert_array_equal(back.X, inst.data.X)
    np.testing.assert_array_equal(back.y, inst.data.y)
    side = json.loads(side_fh.getvalue())
    assert side["n"] == 6 and side["x_signs"] == inst.x_signs.tolist()
    assert [tuple(s) for s in side["subsets"]] == inst.subsets
