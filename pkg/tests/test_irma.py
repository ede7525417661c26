"""irma: label parsing, cardinality tables, position-weighted error."""

from __future__ import annotations

import math
import random
import string

import pytest
from hypothesis import given
from hypothesis import strategies as st

from radbar.irma import (
    AXIS_LENGTHS,
    CardinalityTable,
    IrmaCode,
    IrmaCodeError,
    build_cardinalities,
    format_report,
    irma_error,
    parse_irma,
    report_to_json_dict,
    total_error,
)

ALPHABET = string.digits + string.ascii_lowercase


def error_oracle(query: str, retrieved: str, counts) -> float:
    """Direct, independent evaluation of the weighted-mismatch sum."""
    bounds = [(0, 4), (4, 7), (7, 10), (10, 13)]
    acc = 0.0
    for k, (lo, hi) in enumerate(bounds):
        for j in range(hi - lo):
            if query[lo + j] != retrieved[lo + j]:
                acc += (1.0 / counts[k][j]) * (1.0 / (j + 1))
    return acc


def random_code(rng: random.Random) -> IrmaCode:
    return IrmaCode("".join(rng.choice(ALPHABET) for _ in range(13)))


def random_table(rng: random.Random) -> CardinalityTable:
    return CardinalityTable(
        counts=tuple(
            tuple(rng.randint(1, 36) for _ in range(n)) for n in AXIS_LENGTHS
        )
    )


hyphenated = st.tuples(
    st.text(ALPHABET, min_size=4, max_size=4),
    st.text(ALPHABET, min_size=3, max_size=3),
    st.text(ALPHABET, min_size=3, max_size=3),
    st.text(ALPHABET, min_size=3, max_size=3),
).map(lambda parts: "-".join(parts))


class TestParse:
    def test_hyphenated_form(self):
        code = parse_irma("1121-127-700-500")
        assert code.axes == ("1121", "127", "700", "500")
        assert code.raw == "1121127700500"

    def test_plain_13(self):
        code = parse_irma("1121127700500")
        assert code.hyphenated() == "1121-127-700-500"

    def test_wrong_length_rejected(self):
        with pytest.raises(IrmaCodeError, match="13"):
            parse_irma("112112770050")  # 12 chars

    def test_misplaced_hyphens_rejected(self):
        with pytest.raises(IrmaCodeError):
            parse_irma("11211-27-700-500")

    def test_non_alphanumeric_rejected(self):
        with pytest.raises(IrmaCodeError, match="alphanumeric"):
            parse_irma("1121-127-700-5!0")

    @given(hyphenated)
    def test_roundtrip(self, text):
        assert parse_irma(text).hyphenated() == text


class TestCardinalities:
    def test_single_code_all_ones(self):
        table = build_cardinalities([parse_irma("1121-127-700-500")])
        assert all(b == 1 for axis in table.counts for b in axis)

    def test_one_differing_position(self):
        table = build_cardinalities(
            [parse_irma("1121-127-700-500"), parse_irma("1122-127-700-500")]
        )
        assert table.counts[0] == (1, 1, 1, 2)
        assert table.counts[1] == table.counts[2] == table.counts[3] == (1, 1, 1)

    def test_ten_distinct_characters(self):
        codes = [parse_irma(f"112{d}-127-700-500") for d in "0123456789"]
        table = build_cardinalities(codes)
        assert table.counts[0][3] == 10

    def test_empty_rejected(self):
        with pytest.raises(ValueError, match="empty"):
            build_cardinalities([])

    def test_zero_count_rejected(self):
        with pytest.raises(ValueError):
            CardinalityTable(counts=((1, 1, 1, 0), (1, 1, 1), (1, 1, 1), (1, 1, 1)))

    def test_shape_enforced(self):
        with pytest.raises(ValueError, match="shape"):
            CardinalityTable(counts=((1, 1, 1), (1, 1, 1), (1, 1, 1), (1, 1, 1)))


class TestIrmaError:
    def test_identical_codes_score_zero(self):
        table = random_table(random.Random(1))
        code = parse_irma("112a-127-7b0-500")
        assert irma_error(code, code, table) == 0.0

    def test_single_t1_mismatch(self):
        counts = ((3, 1, 1, 1), (1, 1, 1), (1, 1, 1), (1, 1, 1))
        table = CardinalityTable(counts=counts)
        a = parse_irma("1121-127-700-500")
        b = parse_irma("9121-127-700-500")
        assert irma_error(a, b, table) == pytest.approx(1 / 3, abs=1e-15)

    def test_single_d2_mismatch(self):
        counts = ((1, 1, 1, 1), (1, 5, 1), (1, 1, 1), (1, 1, 1))
        table = CardinalityTable(counts=counts)
        a = parse_irma("1121-127-700-500")
        b = parse_irma("1121-157-700-500")
        assert irma_error(a, b, table) == pytest.approx(0.1, abs=1e-15)

    def test_matches_oracle_on_random_pairs(self):
        rng = random.Random(42)
        for _ in range(300):
            table = random_table(rng)
            a, b = random_code(rng), random_code(rng)
            got = irma_error(a, b, table)
            want = error_oracle(a.raw, b.raw, table.counts)
            assert got == pytest.approx(want, abs=1e-12)

    def test_symmetry_and_bound(self):
        rng = random.Random(7)
        for _ in range(200):
            table = random_table(rng)
            a, b = random_code(rng), random_code(rng)
            assert irma_error(a, b, table) == irma_error(b, a, table)
            assert 0.0 <= irma_error(a, b, table) <= table.max_error() + 1e-12

    def test_position_weight_monotonicity(self):
        # same cardinality everywhere: a flip at position j outweighs j+1
        table = CardinalityTable(counts=((4, 4, 4, 4), (4, 4, 4), (4, 4, 4), (4, 4, 4)))
        base = parse_irma("aaaa-aaa-aaa-aaa")
        for k, (lo, n) in enumerate(((0, 4), (4, 3), (7, 3), (10, 3))):
            for j in range(n - 1):
                early = list(base.raw)
                early[lo + j] = "b"
                late = list(base.raw)
                late[lo + j + 1] = "b"
                e1 = irma_error(base, IrmaCode("".join(early)), table)
                e2 = irma_error(base, IrmaCode("".join(late)), table)
                assert e1 > e2

    def test_hierarchical_mode_propagates(self):
        table = CardinalityTable(counts=((1, 1, 1, 1), (2, 2, 2), (1, 1, 1), (1, 1, 1)))
        a = parse_irma("1121-127-700-500")
        b = parse_irma("1121-027-700-500")  # D axis differs at position 1 only
        flat = irma_error(a, b, table)
        deep = irma_error(a, b, table, hierarchical=True)
        assert flat == pytest.approx(0.5)
        # positions 2 and 3 count as wrong too: 1/2 + 1/2/2 + 1/2/3
        assert deep == pytest.approx(0.5 + 0.25 + 1 / 6)


class TestTotalError:
    def test_all_identical_is_zero(self):
        table = random_table(random.Random(3))
        code = parse_irma("1121-127-700-500")
        report = total_error([(code, code)] * 5, table)
        assert report.total_error == 0.0
        assert report.query_count == 5

    def test_sum_of_hand_values(self):
        counts = ((2, 1, 1, 1), (1, 1, 1), (1, 4, 1), (1, 1, 2))
        table = CardinalityTable(counts=counts)
        q = parse_irma("1121-127-700-500")
        h1 = parse_irma("9121-127-700-500")  # T pos 1: 1/2
        h2 = parse_irma("1121-127-740-500")  # A pos 2: 1/4/2
        h3 = parse_irma("1121-127-700-509")  # B pos 3: 1/2/3
        report = total_error([(q, h1), (q, h2), (q, h3)], table)
        assert report.per_query_errors == pytest.approx((0.5, 0.125, 1 / 6))
        assert report.total_error == pytest.approx(0.5 + 0.125 + 1 / 6, rel=1e-12)

    def test_total_is_sum_and_permutation_invariant(self):
        rng = random.Random(11)
        table = random_table(rng)
        pairs = [(random_code(rng), random_code(rng)) for _ in range(50)]
        report = total_error(pairs, table)
        assert report.total_error == pytest.approx(
            math.fsum(report.per_query_errors), rel=1e-9
        )
        shuffled = pairs[:]
        rng.shuffle(shuffled)
        assert total_error(shuffled, table).total_error == pytest.approx(
            report.total_error, rel=1e-9
        )

    def test_empty_rejected(self):
        table = random_table(random.Random(5))
        with pytest.raises(ValueError, match="empty"):
            total_error([], table)

    def test_report_json_shape(self):
        table = CardinalityTable(counts=((1, 1, 1, 1), (1, 1, 1), (1, 1, 1), (1, 1, 1)))
        q = parse_irma("1121-127-700-500")
        report = total_error([(q, q)], table, ids=[("q1", "h1")])
        doc = report_to_json_dict(report, skipped=2)
        assert doc["query_count"] == 1
        assert doc["skipped_queries"] == 2
        assert doc["per_query"] == [{"query_id": "q1", "hit_id": "h1", "error": 0.0}]
        text = format_report(report, skipped=2)
        assert "total error" in text and "q1" in text
