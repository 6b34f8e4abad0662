import pytest

from vimedkit.filtering import (
    FilterConfig,
    FilterStats,
    apply_filters,
    dedup,
    filter_by_length,
    take_subset,
)

from .conftest import make_abstract


def body_of_length(n: int, tag: str = "w") -> str:
    return " ".join(f"{tag}{i}" for i in range(n))


class TestFilterByLength:
    def test_boundary_at_max_tokens(self):
        records = [
            make_abstract("a", body_of_length(511)),
            make_abstract("b", body_of_length(512)),
            make_abstract("c", body_of_length(513)),
        ]
        stats = FilterStats()
        kept = list(filter_by_length(records, 512, stats))
        assert [r.pmid for r in kept] == ["a", "b"]
        assert stats.dropped_overlength == 1

    def test_empty_input(self):
        stats = FilterStats()
        assert list(filter_by_length([], 512, stats)) == []
        assert stats.dropped_overlength == 0

    def test_max_tokens_one(self):
        records = [make_abstract("a", "a"), make_abstract("b", "a b")]
        kept = list(filter_by_length(records, 1))
        assert [r.pmid for r in kept] == ["a"]

    def test_order_preserved(self):
        records = [make_abstract(str(i), body_of_length(i + 1)) for i in range(10)]
        kept = list(filter_by_length(records, 5))
        assert [r.pmid for r in kept] == [str(i) for i in range(5)]


class TestDedup:
    def test_whitespace_collapse_in_key(self):
        records = [make_abstract("a", "a  b"), make_abstract("b", "a b")]
        stats = FilterStats()
        kept = list(dedup(records, stats))
        assert [r.pmid for r in kept] == ["a"]
        assert stats.duplicates == 1

    def test_all_distinct_is_identity(self):
        records = [make_abstract(str(i), f"body {i}") for i in range(5)]
        assert list(dedup(records)) == records

    def test_thousand_records_ten_bodies(self):
        bodies = [f"unique body {i}" for i in range(10)]
        records = [
            make_abstract(str(i), bodies[i % 10]) for i in range(1000)
        ]
        kept = list(dedup(records))
        # Oracle: sort-and-unique over the fixture bodies.
        assert sorted({r.body for r in records}) == sorted(b.body for b in kept)
        assert len(kept) == 10
        # First occurrence wins: the first ten records are the survivors.
        assert [r.pmid for r in kept] == [str(i) for i in range(10)]

    def test_survivors_not_mutated(self):
        records = [make_abstract("a", "x y"), make_abstract("b", "x y")]
        kept = list(dedup(records))
        assert kept[0] is records[0]


class TestTakeSubset:
    def test_size_equal_to_input_is_identity(self):
        records = [make_abstract(str(i), f"b {i}") for i in range(10)]
        assert take_subset(records, 10, seed=1) == records

    def test_size_zero(self):
        records = [make_abstract(str(i), f"b {i}") for i in range(10)]
        assert take_subset(records, 0, seed=1) == []

    def test_reproducible(self):
        records = [make_abstract(str(i), f"b {i}") for i in range(100)]
        first = take_subset(records, 10, seed=42)
        second = take_subset(records, 10, seed=42)
        assert first == second
        assert len(first) == 10

    def test_output_in_input_order(self):
        records = [make_abstract(str(i), f"b {i}") for i in range(100)]
        selected = take_subset(records, 20, seed=7)
        indices = [int(r.pmid) for r in selected]
        assert indices == sorted(indices)

    def test_shortfall_flagged(self):
        records = [make_abstract(str(i), f"b {i}") for i in range(3)]
        stats = FilterStats()
        selected = take_subset(records, 10, seed=1, stats=stats)
        assert selected == records
        assert stats.subset_shortfall is True

    def test_different_seeds_differ(self):
        records = [make_abstract(str(i), f"b {i}") for i in range(200)]
        assert take_subset(records, 10, seed=1) != take_subset(records, 10, seed=2)

    def test_negative_size_rejected(self):
        with pytest.raises(ValueError):
            take_subset([], -1, seed=0)


class TestComposition:
    def test_filter_dedup_commute_on_surviving_set(self):
        records = [
            make_abstract("a", body_of_length(3)),
            make_abstract("b", body_of_length(3)),  # dup of a
            make_abstract("c", body_of_length(6)),
            make_abstract("d", body_of_length(6)),  # dup of c
            make_abstract("e", body_of_length(2, tag="x")),
        ]
        max_tokens = 4
        one = {r.body for r in dedup(filter_by_length(records, max_tokens))}
        other = {
            r.body for r in filter_by_length(dedup(records), max_tokens)
        }
        assert one == other

    def test_apply_filters_pipeline(self):
        records = [make_abstract(str(i), f"b {i % 20} tail") for i in range(200)]
        cfg = FilterConfig(max_tokens=10, dedup=True, subset_size=5, subset_seed=3)
        kept, stats = apply_filters(records, cfg)
        assert len(kept) == 5
        assert stats.records_in == 200
        assert stats.duplicates == 180
        assert stats.subset_selected == 5
        assert stats.seeds["subset_seed"] == 3


class TestFilterConfig:
    def test_max_tokens_validation(self):
        with pytest.raises(ValueError):
            FilterConfig(max_tokens=0)

    def test_subset_size_validation(self):
        with pytest.raises(ValueError):
            FilterConfig(subset_size=-5)
