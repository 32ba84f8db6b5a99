import random

import pytest

from rfrepo.errors import CorruptSnapshot
from rfrepo.model import Campaign, Journey, LwwStamp
from rfrepo.state import NodeRole
from rfrepo.store import (
    Account,
    AccountRole,
    StoreLog,
    account_entry,
    campaign_entry,
    claim_entry,
    hash_token,
    journey_entry,
    load_snapshot,
    record_entry,
    recover_state,
    replay_full,
    snapshot_path,
    state_entries,
    write_snapshot,
)

from conftest import build_record
from test_sync import make_claim


def fingerprint(replica, accounts):
    return "\n".join(state_entries(replica, accounts))


def gen_log(rng, n_entries):
    """A plausible random log: campaign metas, journeys, records, claims,
    accounts in arbitrary interleavings."""
    lines = []
    camp = Campaign("c1", "camp", "owner", None, set(), LwwStamp(0, "n0"))
    lines.append(campaign_entry(camp))
    journey_counter = 0
    journeys = []
    ts = 0
    while len(lines) < n_entries:
        kind = rng.random()
        if kind < 0.5:
            rec = build_record(ts=ts, power=round(rng.uniform(-120, -40), 1))
            ts += 1
            lines.append(record_entry(rec))
            if journeys:
                j = rng.choice(journeys)
                j.record_ids.append(rec.record_id)
                lines.append(journey_entry(j))
        elif kind < 0.65:
            journey_counter += 1
            j = Journey(
                journey_id=f"j{journey_counter}", campaign_id="c1",
                collector="acct", device_serial=f"D-{journey_counter}",
            )
            journeys.append(j)
            lines.append(journey_entry(j))
        elif kind < 0.8:
            camp = Campaign(
                "c1", f"camp-{len(lines)}", "owner", None, set(),
                LwwStamp(len(lines), "n0"),
            )
            lines.append(campaign_entry(camp))
        elif kind < 0.92:
            claim = make_claim(f"cl{rng.randrange(5)}", wall=len(lines))
            lines.append(claim_entry(claim))
        else:
            acct = Account(
                account_id=f"acc-{rng.randrange(4)}", name="n", salt="ab",
                token_hash=hash_token("ab", "tok"), role=AccountRole.COLLECTOR,
            )
            lines.append(account_entry(acct))
    return lines[:n_entries]


class TestStoreLog:
    def test_offsets_sequential(self, tmp_path):
        store = StoreLog(tmp_path / "log.zrl")
        offsets = [store.append(f"ACCOUNT,acc-{i},n,ab,{hash_token('ab', 't')},COLLECTOR") for i in range(5)]
        assert offsets == [0, 1, 2, 3, 4]
        assert store.next_offset == 5

    def test_append_survives_reopen(self, tmp_path):
        path = tmp_path / "log.zrl"
        store = StoreLog(path)
        store.append(record_entry(build_record()))
        store.close()
        reopened = StoreLog(path)
        assert reopened.next_offset == 1
        assert len(list(reopened.entries())) == 1

    def test_duplicate_record_entry_is_state_noop(self, tmp_path):
        rec = build_record()
        replica, accounts = replay_full([record_entry(rec), record_entry(rec)], "n", NodeRole.REGIONAL)
        assert len(replica.records) == 1

    def test_torn_tail_dropped_on_open(self, tmp_path):
        path = tmp_path / "log.zrl"
        store = StoreLog(path)
        store.append(record_entry(build_record(ts=1)))
        store.append(record_entry(build_record(ts=2)))
        store.close()
        with path.open("ab") as fh:
            fh.write(b"RECORD,ZRF1,deadbeef")  # no terminator: torn write
        reopened = StoreLog(path)
        assert reopened.next_offset == 2
        assert len(list(reopened.entries())) == 2

    def test_rejects_multiline_entry(self, tmp_path):
        store = StoreLog(tmp_path / "log.zrl")
        with pytest.raises(ValueError):
            store.append("a\nb")


class TestRecovery:
    def test_empty_genesis(self, tmp_path):
        replica, accounts, store = recover_state(tmp_path, "n1", NodeRole.REGIONAL)
        assert replica.records == {} and replica.campaigns == {} and accounts == {}
        assert store.next_offset == 0

    def test_recover_includes_appended_entry(self, tmp_path):
        rec = build_record()
        store = StoreLog(tmp_path / "log.zrl")
        store.append(record_entry(rec))
        store.close()
        replica, _, _ = recover_state(tmp_path, "n1", NodeRole.REGIONAL)
        assert rec.record_id in replica.records

    def test_snapshot_plus_suffix_equals_full_replay(self, tmp_path):
        rng = random.Random(123)
        for trial in range(10):
            lines = gen_log(rng, rng.randrange(5, 60))
            workdir = tmp_path / f"t{trial}"
            workdir.mkdir()
            store = StoreLog(workdir / "log.zrl")
            for line in lines:
                store.append(line)
            store.close()
            cut = rng.randrange(0, len(lines) + 1)
            replica_at_cut, accounts_at_cut = replay_full(lines[:cut], "n1", NodeRole.REGIONAL)
            write_snapshot(workdir, replica_at_cut, accounts_at_cut, cut)

            recovered, rec_accounts, _ = recover_state(workdir, "n1", NodeRole.REGIONAL)
            oracle, oracle_accounts = replay_full(lines, "n1", NodeRole.REGIONAL)
            assert fingerprint(recovered, rec_accounts) == fingerprint(oracle, oracle_accounts)

    def test_corrupt_snapshot_falls_back_to_full_replay(self, tmp_path):
        lines = gen_log(random.Random(9), 20)
        store = StoreLog(tmp_path / "log.zrl")
        for line in lines:
            store.append(line)
        store.close()
        replica, accounts = replay_full(lines[:10], "n1", NodeRole.REGIONAL)
        snap = write_snapshot(tmp_path, replica, accounts, 10)
        body = snap.read_text()
        snap.write_text(body.replace("camp", "pmac", 1))  # flip some state bytes

        with pytest.raises(CorruptSnapshot):
            load_snapshot(snap, "n1", NodeRole.REGIONAL)
        recovered, rec_accounts, _ = recover_state(tmp_path, "n1", NodeRole.REGIONAL)
        oracle, oracle_accounts = replay_full(lines, "n1", NodeRole.REGIONAL)
        assert fingerprint(recovered, rec_accounts) == fingerprint(oracle, oracle_accounts)

    def test_snapshot_round_trip(self, tmp_path):
        lines = gen_log(random.Random(4), 30)
        replica, accounts = replay_full(lines, "n1", NodeRole.REGIONAL)
        write_snapshot(tmp_path, replica, accounts, len(lines))
        offset, loaded, loaded_accounts = load_snapshot(
            snapshot_path(tmp_path, len(lines)), "n1", NodeRole.REGIONAL
        )
        assert offset == len(lines)
        assert fingerprint(loaded, loaded_accounts) == fingerprint(replica, accounts)

    def test_byte_level_cut_points(self, tmp_path):
        lines = gen_log(random.Random(77), 25)
        store = StoreLog(tmp_path / "log.zrl")
        for line in lines:
            store.append(line)
        store.close()
        blob = (tmp_path / "log.zrl").read_bytes()
        rng = random.Random(78)
        for _ in range(20):
            cut = rng.randrange(0, len(blob) + 1)
            crash_dir = tmp_path / f"cut{cut}"
            crash_dir.mkdir(exist_ok=True)
            (crash_dir / "log.zrl").write_bytes(blob[:cut])
            recovered, rec_accounts, _ = recover_state(crash_dir, "n1", NodeRole.REGIONAL)
            surviving = blob[:cut].decode("utf-8", errors="replace").splitlines()
            complete = surviving if blob[:cut].endswith(b"\n") else surviving[:-1]
            oracle, oracle_accounts = replay_full(complete, "n1", NodeRole.REGIONAL)
            assert fingerprint(recovered, rec_accounts) == fingerprint(oracle, oracle_accounts)
