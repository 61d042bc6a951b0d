import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from penreg.dataset import (
    FEATURES,
    Dataset,
    DefendantRecord,
    assign_folds,
    destandardize,
    load_csv,
    split,
    standardize,
    to_dataset,
)
from penreg.errors import (
    ConstantColumn,
    DataError,
    DataQualityError,
    DegenerateSplit,
    EmptyInput,
    HeaderMissing,
    InvalidK,
)

HEADER = (
    "id,race,sex,age,juv_fel_count,juv_misd_count,juv_other_count,priors_count,"
    "c_charge_degree,two_year_recid,score_text\n"
)


def write(tmp_path, body, header=HEADER, name="d.csv"):
    p = tmp_path / name
    p.write_text(header + body, encoding="utf-8")
    return p


def rec(race, sex, age, jf, jm, jo, pr, cd, y, c=None):
    return DefendantRecord(race, sex, age, jf, jm, jo, pr, cd, y, c)


FIVE = [
    rec(1, 0, 25, 0, 1, 0, 2, 1, 1),
    rec(2, 1, 30, 1, 0, 0, 0, 0, 0),
    rec(3, 0, 45, 0, 0, 2, 5, 1, 1),
    rec(2, 0, 22, 0, 0, 0, 1, 0, 0),
    rec(6, 1, 58, 2, 0, 1, 7, 1, 1),
]


def test_load_translates_propublica_codes(tmp_path):
    p = write(
        tmp_path,
        '1,Caucasian,Male,34,0,0,0,0,F,0,Low\n'
        '2,African-American,Female,24,0,0,1,4,M,1,High\n'
        '3,"Native American",Male,41,1,0,0,14,F,1,Medium\n',
    )
    records, report = load_csv(p)
    assert report.retained == 3 and report.dropped == 0
    assert records[0] == rec(1, 0, 34, 0, 0, 0, 0, 1, 0, 0)
    assert records[1] == rec(2, 1, 24, 0, 0, 1, 4, 0, 1, 1)
    assert records[2].race == 5 and records[2].compas_prediction == 1


def test_load_drops_row_missing_age(tmp_path):
    p = write(
        tmp_path,
        "1,Caucasian,Male,34,0,0,0,0,F,0,Low\n"
        "2,Hispanic,Male,,0,0,0,1,M,1,Low\n"
        "3,Asian,Female,52,0,0,0,3,M,0,Medium\n",
    )
    records, report = load_csv(p)
    assert len(records) == 2
    assert report.dropped == 1
    assert report.drop_reasons == {"missing age": 1}


def test_empty_file_with_header_is_not_an_error(tmp_path):
    records, report = load_csv(write(tmp_path, ""))
    assert records == [] and report.retained == 0 and report.dropped == 0


def test_missing_header_column(tmp_path):
    p = write(tmp_path, "1,Caucasian\n", header="id,race\n")
    with pytest.raises(HeaderMissing) as e:
        load_csv(p)
    assert e.value.column == "sex"


def test_missing_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_csv(tmp_path / "nope.csv")


def test_mostly_bad_rows_raise(tmp_path):
    p = write(
        tmp_path,
        "1,Martian,Male,34,0,0,0,0,F,0,Low\n"
        "2,Martian,Male,34,0,0,0,0,F,0,Low\n"
        "3,Asian,Female,52,0,0,0,3,M,0,Medium\n",
    )
    with pytest.raises(DataQualityError):
        load_csv(p)


def test_custom_column_map_and_no_compas(tmp_path):
    header = "r,s,a,jf,jm,jo,pc,deg,out\n"
    p = write(tmp_path, "2,1,30,0,0,0,1,1,1\n", header=header)
    cmap = dict(zip(
        ("race", "sex", "age", "juv_fel_count", "juv_misd_count", "juv_other_count",
         "priors_count", "charge_degree", "two_year_recid"),
        header.strip().split(","),
    ))
    cmap["compas_prediction"] = None
    records, _ = load_csv(p, cmap)
    assert records == [rec(2, 1, 30, 0, 0, 0, 1, 1, 1, None)]


def test_record_invariants():
    with pytest.raises(DataError):
        rec(7, 0, 30, 0, 0, 0, 0, 0, 0)
    with pytest.raises(DataError):
        rec(1, 0, 0, 0, 0, 0, 0, 0, 0)
    with pytest.raises(DataError):
        rec(1, 0, 30, -1, 0, 0, 0, 0, 0)


def test_to_dataset_single_record_identity():
    d = to_dataset([rec(4, 1, 19, 0, 0, 0, 0, 0, 1)])
    assert d.feature_names == FEATURES
    np.testing.assert_array_equal(d.X, [[4, 1, 19, 0, 0, 0, 0, 0]])
    np.testing.assert_array_equal(d.y, [1.0])
    assert not d.is_standardized


def test_to_dataset_column_means_by_hand():
    d = to_dataset(FIVE)
    # hand sums: race 14, sex 2, age 180, jf 3, jm 1, jo 3, priors 15, degree 3
    np.testing.assert_allclose(d.X.mean(axis=0), [2.8, 0.4, 36.0, 0.6, 0.2, 0.6, 3.0, 0.6])
    np.testing.assert_array_equal(d.X[2], FIVE[2].features())  # row order kept


def test_to_dataset_rejects_empty():
    with pytest.raises(EmptyInput):
        to_dataset([])


def four_rows():
    X = np.array([[1, 0, 2], [2, 0, 4], [3, 1, 4], [4, 1, 10]], dtype=float)
    return Dataset(X, [0, 1, 0, 1], ("a", "b", "c"))


def test_standardize_stats_by_hand():
    s = standardize(four_rows())
    np.testing.assert_allclose(s.means, [2.5, 0.5, 5.0])
    np.testing.assert_allclose(s.scales, [np.sqrt(1.25), 0.5, 3.0])
    np.testing.assert_allclose(s.X[:, 2], [-1, -1 / 3, -1 / 3, 5 / 3])
    np.testing.assert_array_equal(s.y, [0, 1, 0, 1])


def test_standardize_centered_unit_column_unchanged():
    X = np.column_stack([[-1.0, 1.0, -1.0, 1.0], [1.0, 2.0, 3.0, 5.0]])
    s = standardize(Dataset(X, np.zeros(4), ("u", "v")))
    np.testing.assert_allclose(s.X[:, 0], X[:, 0], atol=1e-12)


def test_standardize_constant_column():
    X = np.column_stack([[1.0, 2.0, 3.0], [0.1, 0.1, 0.1]])
    with pytest.raises(ConstantColumn) as e:
        standardize(Dataset(X, np.zeros(3), ("ok", "flat")))
    assert e.value.name == "flat"


def test_dataset_is_immutable():
    d = four_rows()
    with pytest.raises(ValueError):
        d.X[0, 0] = 5.0


@settings(max_examples=50, deadline=None)
@given(
    st.integers(3, 40),
    st.integers(1, 6),
    st.integers(0, 2**32 - 1),
)
def test_standardize_properties(n, p, seed):
    r = np.random.default_rng(seed)
    X = r.normal(size=(n, p)) * r.uniform(0.1, 100, size=p) + r.normal(size=p) * 50
    d = Dataset(X, r.normal(size=n), tuple(map(str, range(p))))
    s = standardize(d)
    assert np.all(np.abs(s.X.mean(axis=0)) < 1e-10)
    assert np.all(np.abs(s.X.std(axis=0) - 1) < 1e-10)
    np.testing.assert_allclose(destandardize(s).X, X, rtol=0, atol=1e-10 * max(1, np.abs(X).max()))


def test_split_small():
    plan = split(10, 1, 0.8)
    assert len(plan.train_indices) == 8 and len(plan.test_indices) == 2
    assert set(plan.train_indices).isdisjoint(plan.test_indices)
    assert sorted([*plan.train_indices, *plan.test_indices]) == list(range(10))


def test_split_full_size():
    plan = split(7214, 424242, 0.8)
    assert len(plan.test_indices) == 1443


def test_split_deterministic():
    a, b = split(500, 17, 0.8), split(500, 17, 0.8)
    assert a.train_indices.tobytes() == b.train_indices.tobytes()
    assert a.test_indices.tobytes() == b.test_indices.tobytes()
    assert split(500, 18, 0.8).train_indices.tobytes() != a.train_indices.tobytes()


@pytest.mark.parametrize("n,frac", [(1, 0.5), (2, 0.1), (3, 0.99), (10, 0.0), (10, 1.0)])
def test_split_degenerate(n, frac):
    with pytest.raises(DegenerateSplit):
        split(n, 0, frac)


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 300), st.integers(0, 2**64 - 1), st.floats(0.05, 0.95))
def test_split_partition_property(n, seed, frac):
    try:
        plan = split(n, seed, frac)
    except DegenerateSplit:
        return
    assert len(plan.train_indices) == int(np.floor(frac * n + 0.5))
    both = np.concatenate([plan.train_indices, plan.test_indices])
    assert sorted(both.tolist()) == list(range(n))


def test_folds_leave_one_out():
    labels = assign_folds(10, 10, 3)
    assert sorted(labels.tolist()) == list(range(10))


def test_folds_full_size():
    sizes = sorted(np.bincount(assign_folds(7214, 10, 5)).tolist())
    assert sizes == [721] * 6 + [722] * 4


def test_folds_deterministic_and_invalid():
    assert assign_folds(50, 5, 1).tobytes() == assign_folds(50, 5, 1).tobytes()
    for k in (1, 11):
        with pytest.raises(InvalidK):
            assign_folds(10, k, 0)


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 200), st.data())
def test_fold_sizes_balanced(n, data):
    k = data.draw(st.integers(2, n))
    sizes = np.bincount(assign_folds(n, k, data.draw(st.integers(0, 2**64 - 1))), minlength=k)
    assert sizes.max() - sizes.min() <= 1 and sizes.sum() == n
