import datetime as dt

import numpy as np
import pytest

from poolpart import (
    Batch,
    PoolRecord,
    ValidationError,
    filter_pools,
    impute_batches,
    parse_pools,
    read_batches,
    write_batches,
    write_pools,
)

T0 = dt.datetime(2020, 4, 5, 10, 0, 0)


def rec(pid, minutes, statuses, ts=True):
    return PoolRecord(
        pool_id=pid,
        run_timestamp=T0 + dt.timedelta(minutes=minutes) if ts else None,
        pool_size=len(statuses),
        statuses=statuses,
    )


GOLDEN = """pool_id,run_timestamp,pool_size,statuses
a1,2020-04-05T10:00:00,8,NNPNNNNN
a2,2020-04-05T10:07:00,8,NNNNNNNN
b7,,8,NNNNNNNN
c3,2020-04-05T11:00:00,5,NNNNN
d9,2020-04-05T12:00:00,8,NNINNNNN
"""


class TestParsePools:
    def test_golden_fixture_parses_field_exact(self, tmp_path):
        path = tmp_path / "pools.csv"
        path.write_text(GOLDEN)
        records = parse_pools(path)
        assert len(records) == 5
        assert records[0] == PoolRecord("a1", T0, 8, "NNPNNNNN")
        assert records[2].run_timestamp is None
        assert records[3].pool_size == 5
        assert records[4].has_inconclusive

    def test_empty_file_with_header(self, tmp_path):
        path = tmp_path / "pools.csv"
        path.write_text("pool_id,run_timestamp,pool_size,statuses\n")
        assert parse_pools(path) == []

    def test_inconclusive_token_is_not_an_error(self, tmp_path):
        path = tmp_path / "pools.csv"
        path.write_text("pool_id,run_timestamp,pool_size,statuses\nx,2020-01-01T00:00:00,2,IN\n")
        assert parse_pools(path)[0].statuses == "IN"

    def test_missing_column_is_schema_error(self, tmp_path):
        path = tmp_path / "pools.csv"
        path.write_text("pool_id,pool_size,statuses\nx,2,NN\n")
        with pytest.raises(ValidationError, match="run_timestamp"):
            parse_pools(path)

    def test_malformed_rows_reported_with_line_numbers(self, tmp_path):
        path = tmp_path / "pools.csv"
        path.write_text(
            "pool_id,run_timestamp,pool_size,statuses\n"
            "ok,2020-01-01T00:00:00,2,NN\n"
            "bad,2020-01-01T00:00:00,2,NX\n"
            "short,2020-01-01T00:00:00,3,NN\n"
        )
        with pytest.raises(ValidationError) as err:
            parse_pools(path)
        msg = str(err.value)
        assert "line 3" in msg and "line 4" in msg

    def test_missing_file_is_io_error(self, tmp_path):
        with pytest.raises(OSError):
            parse_pools(tmp_path / "absent.csv")

    def test_roundtrip_through_writer(self, tmp_path):
        records = [rec("p1", 0, "NNPN"), rec("p2", 5, "NNNN"), rec("p3", 9, "NINN")]
        path = tmp_path / "pools.csv"
        write_pools(path, records)
        assert parse_pools(path) == records


class TestFilterPools:
    def test_rules_and_counts(self):
        records = [
            rec("keep1", 0, "NNNN"),
            rec("no-ts", 1, "NNNN", ts=False),
            rec("five", 2, "NNNNN"),
            rec("inc", 3, "NINN"),
            rec("keep2", 4, "PPPP"),
        ]
        kept, dropped = filter_pools(records)
        assert [r.pool_id for r in kept] == ["keep1", "keep2"]
        assert dropped["no_timestamp"] == 1
        assert dropped["excluded_size"] == 1
        assert dropped["inconclusive"] == 1
        assert dropped["dropped_specimens"] == 4 + 5 + 4

    def test_first_matching_rule_wins(self):
        # a size-5 pool without timestamp counts under the timestamp rule
        _, dropped = filter_pools([rec("x", 0, "NNNNN", ts=False)])
        assert dropped["no_timestamp"] == 1
        assert dropped["excluded_size"] == 0

    def test_clean_input_is_identity(self):
        records = [rec("a", 0, "NN"), rec("b", 1, "NP")]
        kept, dropped = filter_pools(records)
        assert kept == records
        assert dropped["dropped_specimens"] == 0

    def test_custom_excluded_sizes(self):
        records = [rec("a", 0, "NN"), rec("b", 1, "NNN")]
        kept, dropped = filter_pools(records, excluded_sizes={2, 3})
        assert kept == []
        assert dropped["excluded_size"] == 2


class TestImputeBatches:
    def test_sorts_by_timestamp_before_slicing(self):
        # shuffled input; batch boundaries must follow time order
        records = [rec("late", 20, "PPPP"), rec("early", 0, "NNNN"), rec("mid", 10, "NPNN")]
        batches, remainder = impute_batches(records, 4)
        assert remainder == 0
        assert [b.source_pools for b in batches] == [("early",), ("mid",), ("late",)]
        assert list(batches[0].statuses) == [0, 0, 0, 0]
        assert list(batches[1].statuses) == [0, 1, 0, 0]
        assert list(batches[2].statuses) == [1, 1, 1, 1]

    def test_pools_can_span_batches(self):
        records = [rec("a", 0, "NNN"), rec("b", 1, "PPP")]
        batches, remainder = impute_batches(records, 4)
        assert len(batches) == 1 and remainder == 2
        assert batches[0].source_pools == ("a", "b")
        assert list(batches[0].statuses) == [0, 0, 0, 1]

    def test_exact_fit_leaves_no_remainder(self):
        batches, remainder = impute_batches([rec("a", 0, "NNNN")], 4)
        assert len(batches) == 1 and remainder == 0

    def test_remainder_is_discarded_and_reported(self):
        records = [rec(f"p{i}", i, "NNNNNNNN") for i in range(5)]  # 40 specimens
        batches, remainder = impute_batches(records, 16)
        assert len(batches) == 2
        assert remainder == 8

    def test_conservation(self):
        records = [rec(f"p{i}", i, "NNPNNNNN") for i in range(11)]
        records += [rec("no-ts", 50, "NNNN", ts=False), rec("five", 51, "NNNNN")]
        kept, dropped = filter_pools(records)
        batches, remainder = impute_batches(kept, 16)
        specimens_in = sum(r.pool_size for r in records)
        specimens_out = sum(b.size for b in batches)
        assert specimens_out == specimens_in - dropped["dropped_specimens"] - remainder

    def test_timestamp_ties_keep_input_order(self):
        records = [rec("first", 0, "NN"), rec("second", 0, "PP")]
        batches, _ = impute_batches(records, 2)
        assert [b.source_pools[0] for b in batches] == ["first", "second"]

    def test_unfiltered_input_rejected(self):
        with pytest.raises(ValidationError, match="timestamp"):
            impute_batches([rec("x", 0, "NN", ts=False)], 2)

    def test_order_across_batches(self):
        rng = np.random.default_rng(601)
        records = [rec(f"p{i}", int(rng.integers(0, 500)), "NNNN") for i in range(30)]
        batches, _ = impute_batches(records, 8)
        # reconstruct each batch's latest source timestamp; must be monotone
        stamp = {r.pool_id: r.run_timestamp for r in records}
        latest = [max(stamp[p] for p in b.source_pools) for b in batches]
        earliest = [min(stamp[p] for p in b.source_pools) for b in batches]
        for i in range(len(batches) - 1):
            assert latest[i] <= earliest[i + 1] or latest[i] <= latest[i + 1]


class TestBatchCsv:
    def test_roundtrip(self, tmp_path):
        batches = [
            Batch(0, np.array([0, 1, 0, 0], dtype=np.uint8), ("a",)),
            Batch(1, np.array([1, 1, 0, 1], dtype=np.uint8), ("b", "c")),
        ]
        path = tmp_path / "batches.csv"
        write_batches(path, batches)
        again = read_batches(path)
        assert len(again) == 2
        for orig, back in zip(batches, again):
            assert back.index == orig.index
            assert np.array_equal(back.statuses, orig.statuses)

    def test_stability_byte_for_byte(self, tmp_path):
        records = [rec(f"p{i}", (7 * i) % 23, "NNPNNNN") for i in range(12)]
        pools = tmp_path / "pools.csv"
        write_pools(pools, records)
        outs = []
        for name in ("one.csv", "two.csv"):
            kept, _ = filter_pools(parse_pools(pools))
            batches, _ = impute_batches(kept, 12)
            write_batches(tmp_path / name, batches)
            outs.append((tmp_path / name).read_bytes())
        assert outs[0] == outs[1]

    def test_bad_tokens_rejected(self, tmp_path):
        path = tmp_path / "batches.csv"
        path.write_text("batch_index,statuses\n0,NPI\n")
        with pytest.raises(ValidationError):
            read_batches(path)

    def test_missing_column(self, tmp_path):
        path = tmp_path / "batches.csv"
        path.write_text("statuses\nNP\n")
        with pytest.raises(ValidationError, match="batch_index"):
            read_batches(path)


class TestRecordValidation:
    def test_size_status_mismatch(self):
        with pytest.raises(ValidationError):
            PoolRecord("x", T0, 3, "NN")

    def test_unknown_token(self):
        with pytest.raises(ValidationError, match="unknown status"):
            PoolRecord("x", T0, 2, "NZ")

    def test_batch_must_be_binary(self):
        with pytest.raises(ValidationError):
            Batch(0, np.array([0, 1, 2]))
