import io
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qmsvm.data import make_blobs
from qmsvm.errors import ConfigError, DataError
from qmsvm.eval import (
    TimingReport,
    accuracy,
    accuracy_from_confusion,
    benchmark,
    confusion,
    f1_per_class,
    macro_f1,
    macro_f1_from_confusion,
    write_metrics_csv,
    write_timing_csv,
)
from qmsvm.pipeline import RunConfig


def f1_oracle(pred, truth, C):
    scores = []
    for c in range(C):
        tp = sum(p == c and t == c for p, t in zip(pred, truth))
        fn = sum(p != c and t == c for p, t in zip(pred, truth))
        fp = sum(p == c and t != c for p, t in zip(pred, truth))
        denom = Fraction(tp) + Fraction(fn + fp, 2)
        scores.append(Fraction(1) if denom == 0 else tp / denom)
    return sum(scores) / C


class TestAccuracy:
    def test_identical(self):
        assert accuracy([0, 1, 2], [0, 1, 2]) == 1.0

    def test_complementary(self):
        assert accuracy([0, 1, 1, 0], [1, 0, 0, 1]) == 0.0

    def test_three_of_four(self):
        assert accuracy([0, 1, 1, 1], [0, 0, 1, 1]) == 0.75

    def test_empty(self):
        with pytest.raises(DataError):
            accuracy([], [])

    def test_length(self):
        with pytest.raises(DataError):
            accuracy([0], [0, 1])


class TestMacroF1:
    def test_perfect(self):
        assert macro_f1([0, 1, 2], [0, 1, 2], 3) == 1.0

    def test_crafted(self):
        assert abs(macro_f1([0, 1, 1, 1], [0, 0, 1, 1], 2) - 11 / 15) <= 1e-12

    def test_constant_prediction(self):
        truth = [0, 0, 1, 1, 2, 2]
        pred = [0] * 6
        assert macro_f1(pred, truth, 3) == pytest.approx(float(f1_oracle(pred, truth, 3)), abs=1e-15)
        assert macro_f1(pred, truth, 3) == pytest.approx(1 / 6, abs=1e-15)

    def test_absent_class(self):
        assert f1_per_class(confusion([0, 1], [0, 1], 3)).tolist() == [1.0, 1.0, 1.0]

    def test_out_of_range(self):
        with pytest.raises(DataError):
            macro_f1([3], [0], 3)

    @settings(max_examples=80, deadline=None)
    @given(st.integers(1, 4).flatmap(lambda C: st.tuples(st.just(C), st.lists(st.tuples(st.integers(0, C - 1), st.integers(0, C - 1)), min_size=1, max_size=40))))
    def test_against_oracle(self, case):
        C, pairs = case
        pred, truth = zip(*pairs)
        f = macro_f1(pred, truth, C)
        assert 0.0 <= f <= 1.0
        assert f == pytest.approx(float(f1_oracle(pred, truth, C)), abs=1e-12)
        perm = np.random.default_rng(len(pairs)).permutation(len(pairs))
        assert macro_f1(np.array(pred)[perm], np.array(truth)[perm], C) == f

    def test_shared_confusion(self):
        cm = confusion([0, 1, 1, 1], [0, 0, 1, 1], 2)
        assert cm.tolist() == [[1, 1], [0, 2]]
        assert accuracy_from_confusion(cm) == 0.75
        assert macro_f1_from_confusion(cm) == macro_f1([0, 1, 1, 1], [0, 0, 1, 1], 2)


class TestCsv:
    def test_timing(self):
        r = TimingReport(100, 6, 3, 2, dict(selection=0.1, sampling=0.2, combination=0.3, inference=0.4),
                         dict(selection=0, sampling=36, combination=600, inference=60))
        buf = io.StringIO()
        write_timing_csv([r], buf)
        lines = buf.getvalue().splitlines()
        assert lines[0] == "N,phase,seconds,kernel_evals"
        assert lines[1:] == [
            "100,selection,0.100000,0",
            "100,sampling,0.200000,36",
            "100,combination,0.300000,600",
            "100,inference,0.400000,60",
        ]

    def test_metrics(self):
        buf = io.StringIO()
        write_metrics_csv([("blobs", 10, 6, 0.75, 11 / 15, None)], buf)
        assert buf.getvalue().splitlines() == ["dataset,N,M,accuracy,f1,seconds", "blobs,10,6,0.750000,0.733333,"]


class TestBenchmark:
    CFG = RunConfig(M=6, num_reads=50, sweeps=20, S=10)

    def test_counters(self):
        reports = benchmark([30, 60], self.CFG, test_size=20, repeats=1)
        assert [r.kernel_evals["combination"] for r in reports] == [180, 360]
        assert [r.kernel_evals["inference"] for r in reports] == [120, 120]
        assert all(r.kernel_evals["sampling"] == 36 for r in reports)
        assert all(v >= 0 for r in reports for v in r.seconds.values())

    def test_infeasible(self):
        with pytest.raises(ConfigError, match="infeasible"):
            benchmark([5], self.CFG)

    def test_external_dataset(self):
        d = make_blobs(80, seed=3)
        reports = benchmark([40, 80], self.CFG, repeats=1, dataset=d, test_set=make_blobs(10, seed=4))
        assert [r.N for r in reports] == [40, 80]
        with pytest.raises(ConfigError):
            benchmark([100], self.CFG, dataset=d)
