import logging

import numpy as np
import pytest
from hypothesis import given, strategies as st

from monodnf.core import Dataset, DnfFunction
from monodnf.data import (
    MUSHROOM_ATTRIBUTES,
    CategoricalTable,
    SimSpec,
    load_csv,
    load_mushroom,
    one_hot_encode,
    planted_dnf,
    save_dataset,
    simulate,
    split,
    split_indices,
)


def test_planted_blocks():
    assert planted_dnf((3,), 100) == DnfFunction.from_indices([[0, 1, 2]], 100)
    assert planted_dnf((2, 2), 10).masks == (0b11, 0b1100)


def test_simspec_validation():
    for kw in (dict(n=0), dict(term_sizes=(0,)), dict(term_sizes=(3, 3), p=5), dict(pi0=1.5)):
        base = dict(n=10, p=5, term_sizes=(2,), pi0=0.1, pi1=0.9)
        base.update(kw)
        with pytest.raises(ValueError):
            SimSpec(**base)


def test_simulate_examples():
    out = simulate(SimSpec(200, 10, (3,), 1.0, 1.0, seed=1))
    assert out.dataset.n_p == 200
    assert out.true_f == DnfFunction.from_indices([[0, 1, 2]], 10)
    assert out.beta.shape == (10,) and ((0 <= out.beta) & (out.beta <= 1)).all()
    a, b = simulate(SimSpec(50, 8, (2,), 0.2, 0.8, seed=3)), simulate(SimSpec(50, 8, (2,), 0.2, 0.8, seed=3))
    assert a.dataset == b.dataset and (a.beta == b.beta).all()


def test_simulate_rates_within_three_se():
    out = simulate(SimSpec(100_000, 4, (1,), 0.1, 0.9, seed=2))
    X, y = out.dataset.X, out.dataset.y_bits
    marked = X[:, 0] == 1
    for mask, pi in ((marked, 0.9), (~marked, 0.1)):
        k = int(mask.sum())
        assert abs(y[mask].mean() - pi) < 3 * np.sqrt(pi * (1 - pi) / k)
    assert abs(X.mean(axis=0) - out.beta).max() < 0.01


def test_one_hot_basic():
    t = CategoricalTable(("colour", "size", "const"), (("a", "s", "z"), ("b", "l", "z"), ("c", "s", "z")),
                         ("p", "e", "p"))
    d = one_hot_encode(t)
    assert d.names == ("colour = a", "colour = b", "colour = c", "size = l", "size = s")
    assert d.X.tolist() == [[1, 0, 0, 0, 1], [0, 1, 0, 1, 0], [0, 0, 1, 0, 1]]
    assert d.y_bits.tolist() == [1, 0, 1]
    assert (d.X[:, :3].sum(axis=1) == 1).all()


def test_one_hot_drops_constant_with_warning(caplog):
    t = CategoricalTable(("a", "veil"), (("x", "p"), ("y", "p")), ("e", "p"))
    with caplog.at_level(logging.WARNING):
        d = one_hot_encode(t)
    assert d.p == 2 and "veil" in caplog.text


def test_one_hot_question_mark_is_a_category():
    t = CategoricalTable(("stalk-root",), (("?",), ("b",)), ("p", "e"))
    assert one_hot_encode(t).names == ("stalk-root = ?", "stalk-root = b")


def test_one_hot_negations():
    t = CategoricalTable(("c",), (("a",), ("b",)), ("p", "e"))
    d = one_hot_encode(t, negations=True)
    assert d.names == ("c = a", "NOT c = a", "c = b", "NOT c = b")
    assert d.X.tolist() == [[1, 0, 0, 1], [0, 1, 1, 0]]


@given(st.lists(st.tuples(st.sampled_from("abc"), st.sampled_from("xyzw"), st.sampled_from("ep")), min_size=1, max_size=40))
def test_one_hot_one_bit_per_block(rows):
    t = CategoricalTable(("u", "v"), tuple(r[:2] for r in rows), tuple(r[2] for r in rows))
    if all(len({r[a] for r in rows}) == 1 for a in (0, 1)):
        with pytest.raises(ValueError):
            one_hot_encode(t)
        return
    d = one_hot_encode(t)
    blocks = {}
    for j, nm in enumerate(d.names):
        blocks.setdefault(nm.split(" = ")[0], []).append(j)
    for cols in blocks.values():
        assert (d.X[:, cols].sum(axis=1) == 1).all()


def test_categorical_table_validation():
    with pytest.raises(ValueError):
        CategoricalTable(("a",), (), ())
    with pytest.raises(ValueError):
        CategoricalTable(("a", "b"), (("x",),), ("p",))
    with pytest.raises(ValueError):
        CategoricalTable(("a",), (("x",), ("y",), ("z",)), ("p", "e", "q"))


def test_load_mushroom_format(tmp_path):
    rows = [["p"] + ["x"] * 22, ["e"] + ["y"] * 21 + ["x"]]
    path = tmp_path / "m.data"
    path.write_text("\n".join(",".join(r) for r in rows) + "\n")
    t = load_mushroom(path)
    assert t.attributes == MUSHROOM_ATTRIBUTES and t.labels == ("p", "e")
    d = one_hot_encode(t)
    assert d.n == 2 and d.p == 2 * 21 and d.y_bits.tolist() == [1, 0]
    path.write_text("p,x,y\n")
    with pytest.raises(ValueError):
        load_mushroom(path)
    path.write_text(",".join(["q"] + ["x"] * 22) + "\n")
    with pytest.raises(ValueError):
        load_mushroom(path)


def test_split_sizes_and_determinism():
    tr, te = split_indices(8124, 0.5, 0)
    assert len(tr) == len(te) == 4062
    assert not set(tr) & set(te) and len(set(tr) | set(te)) == 8124
    tr, te = split_indices(11, 0.5, 1)
    assert (len(tr), len(te)) == (5, 6)
    assert all((a == b).all() for a, b in zip(split_indices(50, 0.3, 7), split_indices(50, 0.3, 7)))
    for bad in (0.0, 1.0):
        with pytest.raises(ValueError):
            split_indices(10, bad, 0)
    with pytest.raises(ValueError):
        split_indices(1, 0.5, 0)


def test_split_datasets():
    d = simulate(SimSpec(40, 5, (2,), 0.2, 0.8, seed=0)).dataset
    a, b = split(d, 0.5, 3)
    assert a.n + b.n == 40 and a.n_p + b.n_p == d.n_p and a.names == d.names


def test_csv_roundtrip(tmp_path):
    d = Dataset.from_arrays([[1, 0, 1], [0, 0, 1]], [1, 0], ["a", "b", "c"])
    save_dataset(d, tmp_path / "d.csv")
    assert (tmp_path / "d.csv").read_text() == "a,b,c,y\n1,0,1,1\n0,0,1,0\n"
    assert load_csv(tmp_path / "d.csv") == d


@pytest.mark.parametrize("text", ["a,y\n2,1\n", "a,y\n1\n", "", "a,b\n1,0\n"])
def test_csv_rejects_bad_input(tmp_path, text):
    path = tmp_path / "bad.csv"
    path.write_text(text)
    with pytest.raises(ValueError):
        load_csv(path)
