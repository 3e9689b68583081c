import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mimictree.dataset import (BINARY, CATEGORICAL, CONTINUOUS, ONEHOT, Column, Dataset,
                               FeatureSpec, Schema, apply_norm, lag_expand, load_csv, load_schema,
                               normalize, parse_feature_flag, split_train_test)
from mimictree.exceptions import ConfigError, DataError, LevelError, SchemaError
from oracles import history_lookup


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text, encoding="utf-8")
    return p


def test_binary_column_is_encoded_as_one_zero_one_column(tmp_path):
    p = write(tmp_path, "d.csv", "blocked,q\ntrue,1\nfalse,2\ntrue,3\n")
    d = load_csv(p, [FeatureSpec("blocked", BINARY)], "q")
    assert d.n_rows == 3 and d.n_columns == 1
    assert d.X[:, 0].tolist() == [1.0, 0.0, 1.0]
    assert d.y.tolist() == [1.0, 2.0, 3.0]


def test_categorical_expands_to_onehot_columns(tmp_path):
    p = write(tmp_path, "d.csv", "manpower,q\neven,0\npower,1\nshort,2\n")
    spec = FeatureSpec("manpower", CATEGORICAL, ("even", "short", "power"))
    d = load_csv(p, [spec], "q")
    assert [c.name for c in d.columns] == ["manpower=even", "manpower=short", "manpower=power"]
    assert d.X.sum(axis=1).tolist() == [1.0, 1.0, 1.0]
    assert d.X.tolist() == [[1, 0, 0], [0, 0, 1], [0, 1, 0]]


def test_missing_target_column_names_it(tmp_path):
    p = write(tmp_path, "d.csv", "x\n1\n")
    with pytest.raises(SchemaError, match="'q'"):
        load_csv(p, [FeatureSpec("x", CONTINUOUS)], "q")


def test_unparseable_number_reports_row(tmp_path):
    p = write(tmp_path, "d.csv", "x,q\n1,0\nabc,0\n")
    with pytest.raises(DataError) as exc:
        load_csv(p, [FeatureSpec("x", CONTINUOUS)], "q")
    assert exc.value.row == 1


def test_unknown_level_reports_row(tmp_path):
    p = write(tmp_path, "d.csv", "a,q\npass,0\nshot,0\ndribble,1\n")
    with pytest.raises(LevelError) as exc:
        load_csv(p, [FeatureSpec("a", CATEGORICAL, ("pass", "shot"))], "q")
    assert exc.value.row == 2


def test_invalid_feature_specs():
    with pytest.raises(SchemaError):
        FeatureSpec("a", CATEGORICAL, ())
    with pytest.raises(SchemaError):
        FeatureSpec("a", CATEGORICAL, ("x", "x"))
    with pytest.raises(SchemaError):
        FeatureSpec("a", "ordinal")


def test_schema_file_and_feature_flags(tmp_path):
    p = write(tmp_path, "s.txt", "# comment\ntarget = q\nepisode = ep\nwindow = 3\n"
              "feature.t = continuous\nfeature.manpower = categorical: even, short, power\n")
    s = load_schema(p)
    assert s.target == "q" and s.episode == "ep" and s.window == 3
    assert s.features[1] == FeatureSpec("manpower", CATEGORICAL, ("even", "short", "power"))
    assert parse_feature_flag("blocked:binary") == FeatureSpec("blocked", BINARY)
    assert parse_feature_flag("a:categorical:x,y").levels == ("x", "y")
    with pytest.raises(SchemaError, match="not found"):
        load_schema(tmp_path / "missing.txt")


def test_episode_column_is_read(tmp_path):
    p = write(tmp_path, "d.csv", "x,ep,q\n1,g1,0\n2,g1,0\n3,g2,0\n")
    d = load_csv(p, Schema((FeatureSpec("x", CONTINUOUS),), target="q", episode="ep"))
    assert d.episodes.tolist() == [0, 0, 1]


def _two_feature_dataset(n, episodes):
    X = np.column_stack([np.arange(n, dtype=float), 100 + np.arange(n, dtype=float)])
    cols = (Column("a", CONTINUOUS), Column("b", CONTINUOUS))
    return Dataset(X, cols, y=np.zeros(n), episodes=episodes)


def test_window_one_is_identity():
    d = _two_feature_dataset(4, [0, 0, 1, 1])
    assert lag_expand(d, 1) is d


def test_window_two_shifts_previous_row():
    d = _two_feature_dataset(2, [0, 0])
    e = lag_expand(d, 2)
    assert e.feature_names == ["a(t0)", "b(t0)", "a(t-1)", "b(t-1)"]
    assert e.X[1, 2:].tolist() == d.X[0].tolist()
    assert e.X[0, 2:].tolist() == [0.0, 0.0]


def test_window_three_matches_history_lookup():
    d = _two_feature_dataset(5, [7, 7, 7, 7, 7])
    e = lag_expand(d, 3, pad=-9.0)
    assert np.array_equal(e.X, history_lookup(d.X, d.episodes, 3, -9.0))


@given(st.lists(st.integers(1, 4), min_size=1, max_size=6), st.integers(1, 4))
def test_lag_expand_matches_history_lookup_across_episodes(lengths, window):
    episodes = np.repeat(np.arange(len(lengths)), lengths)
    d = _two_feature_dataset(episodes.size, episodes)
    e = lag_expand(d, window, pad=0.5)
    assert e.n_rows == d.n_rows
    assert np.array_equal(e.X, history_lookup(d.X, episodes, window, 0.5))


def test_bad_window():
    with pytest.raises(ConfigError):
        lag_expand(_two_feature_dataset(2, [0, 0]), 0)


def test_normalize_examples():
    cols = (Column("flat", CONTINUOUS), Column("wide", CONTINUOUS), Column("a", ONEHOT, "x"))
    X = np.array([[2.0, 0.0, 1.0], [2.0, 10.0, 0.0]])
    d, stats = normalize(Dataset(X, cols))
    assert d.X[:, 0].tolist() == [0.0, 0.0] and bool(stats.zero_variance[0])
    assert d.X[:, 1].tolist() == [-1.0, 1.0]
    assert d.X[:, 2].tolist() == [1.0, 0.0]


@given(st.lists(st.floats(-1e6, 1e6), min_size=2, max_size=40))
def test_normalized_columns_are_standard_and_reapplication_is_exact(values):
    X = np.array(values)[:, None]
    d, stats = normalize(Dataset(X, (Column("x", CONTINUOUS),)))
    col = d.X[:, 0]
    if stats.zero_variance[0]:
        assert (col == 0).all()
    else:
        assert abs(col.mean()) <= 1e-6 and abs(col.std() - 1.0) <= 1e-6
    assert np.array_equal(apply_norm(Dataset(X, d.columns), stats).X, d.X)


def test_norm_stats_round_trip():
    d, stats = normalize(_two_feature_dataset(5, None))
    from mimictree.dataset import NormStats
    again = NormStats.from_dict(stats.to_dict())
    assert np.array_equal(apply_norm(_two_feature_dataset(5, None), again).X, d.X)


def test_split_sizes_and_determinism():
    d = _two_feature_dataset(10, None)
    tr, te = split_train_test(d, 0.2, seed=7)
    tr2, te2 = split_train_test(d, 0.2, seed=7)
    assert (tr.n_rows, te.n_rows) == (8, 2)
    assert np.array_equal(tr.X, tr2.X) and np.array_equal(te.X, te2.X)
    rows = sorted(tr.X[:, 0].tolist() + te.X[:, 0].tolist())
    assert rows == list(range(10))


@given(st.integers(2, 300), st.floats(0.01, 0.99), st.integers(0, 10**6))
def test_split_is_a_partition(n, frac, seed):
    d = _two_feature_dataset(n, None)
    tr, te = split_train_test(d, frac, seed)
    assert te.n_rows == int(np.floor(n * frac))
    assert tr.n_rows == int(np.ceil(n * (1 - frac))) or tr.n_rows + te.n_rows == n
    assert sorted(tr.X[:, 0].tolist() + te.X[:, 0].tolist()) == list(range(n))


@pytest.mark.parametrize("frac", [0.0, 1.0, -0.1, 1.5])
def test_split_rejects_bad_fraction(frac):
    with pytest.raises(ConfigError):
        split_train_test(_two_feature_dataset(10, None), frac, 0)


def test_dataset_is_read_only():
    d = _two_feature_dataset(3, None)
    with pytest.raises(ValueError):
        d.X[0, 0] = 5.0
