"""Append-only persistence: newline-framed entry log plus periodic snapshots.

Entries are never rewritten; recovery replays the log (optionally from a
hash-verified snapshot) and a torn final line is dropped with a warning.
Replaying any prefix of the log is always a valid state, which is what makes
crash recovery a pure replay problem.
"""

from __future__ import annotations

import hashlib
import logging
import os
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from urllib.parse import quote, unquote

from .errors import CorruptSnapshot
from .ingest import parse_zrf_line, zrf_line
from .state import (
    NodeRole,
    ReplicaState,
    campaign_text,
    claim_text,
    journey_text,
    parse_campaign_text,
    parse_claim_text,
    parse_journey_text,
)
from .sync import merge_claims

log = logging.getLogger(__name__)

LOG_FILENAME = "log.zrl"
SNAPSHOT_PREFIX = "snapshot-"
SNAPSHOT_SUFFIX = ".zrs"


class AccountRole(str, Enum):
    COLLECTOR = "COLLECTOR"
    OPERATOR = "OPERATOR"


@dataclass(frozen=True)
class Account:
    account_id: str
    name: str
    salt: str
    token_hash: str
    role: AccountRole

    def verify(self, token: str) -> bool:
        return hash_token(self.salt, token) == self.token_hash


def hash_token(salt: str, token: str) -> str:
    return hashlib.sha256((salt + token).encode("utf-8")).hexdigest()


def account_text(a: Account) -> str:
    return f"{a.account_id},{quote(a.name, safe='')},{a.salt},{a.token_hash},{a.role.value}"


def parse_account_text(text: str) -> Account:
    account_id, name, salt, token_hash, role = text.split(",")
    return Account(account_id, unquote(name), salt, token_hash, AccountRole(role))


# ---------------------------------------------------------------------------
# log entries

ENTRY_RECORD = "RECORD"
ENTRY_CAMPAIGN = "CAMPAIGN_META"
ENTRY_JOURNEY = "JOURNEY_APPEND"
ENTRY_CLAIM = "CLAIM_EVENT"
ENTRY_ACCOUNT = "ACCOUNT"


def record_entry(rec) -> str:
    return f"{ENTRY_RECORD},{zrf_line(rec)}"


def campaign_entry(camp) -> str:
    return f"{ENTRY_CAMPAIGN},{campaign_text(camp)}"


def journey_entry(journey) -> str:
    return f"{ENTRY_JOURNEY},{journey_text(journey)}"


def claim_entry(claim) -> str:
    return f"{ENTRY_CLAIM},{claim_text(claim)}"


def account_entry(account: Account) -> str:
    return f"{ENTRY_ACCOUNT},{account_text(account)}"


def replay_entry(replica: ReplicaState, accounts: dict[str, Account], line: str) -> None:
    tag, _, payload = line.partition(",")
    if tag == ENTRY_RECORD:
        replica.add_record(parse_zrf_line(payload))
    elif tag == ENTRY_CAMPAIGN:
        camp = parse_campaign_text(payload)
        existing = replica.campaigns.get(camp.campaign_id)
        if existing is None:
            replica.campaigns[camp.campaign_id] = camp
        elif camp.meta_version >= existing.meta_version:
            existing.name = camp.name
            existing.owner = camp.owner
            existing.region = camp.region
            existing.meta_version = camp.meta_version
    elif tag == ENTRY_JOURNEY:
        replica.upsert_journey(parse_journey_text(payload))
    elif tag == ENTRY_CLAIM:
        claim = parse_claim_text(payload)
        existing = replica.claims.get(claim.claim_id)
        replica.claims[claim.claim_id] = claim if existing is None else merge_claims(existing, claim)
    elif tag == ENTRY_ACCOUNT:
        account = parse_account_text(payload)
        accounts[account.account_id] = account
    else:
        raise ValueError(f"unknown log entry type: {tag!r}")


def normalize_journeys(replica: ReplicaState) -> None:
    """Re-sort journey orderings once all records are available; replay may
    have inserted journey entries before their records existed."""
    for j in replica.journeys.values():
        j.record_ids.sort(key=lambda rid: (replica.timestamp_of(rid), rid))


def mark_derived_records(replica: ReplicaState) -> None:
    """Records referenced only by derived journeys were produced by edits;
    restore their in-memory flag after replay (the flag is not serialized)."""
    original: set[bytes] = set()
    for j in replica.journeys.values():
        if not j.derived:
            original.update(j.record_ids)
    for j in replica.journeys.values():
        if not j.derived:
            continue
        for rid in j.record_ids:
            rec = replica.records.get(rid)
            if rec is not None and rid not in original and not rec.derived:
                object.__setattr__(rec, "derived", True)


# ---------------------------------------------------------------------------
# the log file

class StoreLog:
    """Newline-framed append-only log. Opening truncates any torn final line
    left by a crash; offsets are entry indices starting at 0."""

    def __init__(self, path: Path):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._entry_count = 0
        if self.path.exists():
            self._trim_torn_tail()
            with self.path.open("r", encoding="utf-8") as fh:
                self._entry_count = sum(1 for _ in fh)
        self._fh = self.path.open("a", encoding="utf-8")

    def _trim_torn_tail(self):
        data = self.path.read_bytes()
        if data and not data.endswith(b"\n"):
            keep = data.rfind(b"\n") + 1
            log.warning("dropping torn final log line (%d bytes)", len(data) - keep)
            with self.path.open("r+b") as fh:
                fh.truncate(keep)

    @property
    def next_offset(self) -> int:
        return self._entry_count

    def append(self, entry: str) -> int:
        """Durable append; returns the entry's offset."""
        if "\n" in entry:
            raise ValueError("log entries are single lines")
        offset = self._entry_count
        self._fh.write(entry + "\n")
        self._fh.flush()
        os.fsync(self._fh.fileno())
        self._entry_count += 1
        return offset

    def entries(self, from_offset: int = 0):
        with self.path.open("r", encoding="utf-8") as fh:
            for i, line in enumerate(fh):
                if not line.endswith("\n"):
                    log.warning("dropping torn final log line at offset %d", i)
                    return
                if i >= from_offset:
                    yield line.rstrip("\n")

    def close(self):
        self._fh.close()


# ---------------------------------------------------------------------------
# snapshots

def state_entries(replica: ReplicaState, accounts: dict[str, Account]) -> list[str]:
    """Full state as replayable entries, deterministically ordered. Records
    precede journeys so journey ordering resolves timestamps on replay."""
    lines = []
    for cid in sorted(replica.campaigns):
        lines.append(campaign_entry(replica.campaigns[cid]))
    for rid in sorted(replica.records):
        lines.append(record_entry(replica.records[rid]))
    for jid in sorted(replica.journeys):
        lines.append(journey_entry(replica.journeys[jid]))
    for claim_id in sorted(replica.claims):
        lines.append(claim_entry(replica.claims[claim_id]))
    for account_id in sorted(accounts):
        lines.append(account_entry(accounts[account_id]))
    return lines


def snapshot_path(data_dir: Path, offset: int) -> Path:
    return Path(data_dir) / f"{SNAPSHOT_PREFIX}{offset:012d}{SNAPSHOT_SUFFIX}"


def write_snapshot(data_dir: Path, replica: ReplicaState, accounts: dict[str, Account], offset: int) -> Path:
    body = "".join(line + "\n" for line in state_entries(replica, accounts))
    digest = hashlib.sha256(body.encode("utf-8")).hexdigest()
    target = snapshot_path(data_dir, offset)
    tmp = target.with_suffix(".tmp")
    tmp.write_text(f"ZRS1,{offset},{digest}\n{body}", encoding="utf-8")
    os.replace(tmp, target)
    return target


def load_snapshot(path: Path, node_id: str, role: NodeRole):
    """Returns (offset, replica, accounts); CorruptSnapshot on hash mismatch."""
    text = Path(path).read_text(encoding="utf-8")
    header, _, body = text.partition("\n")
    parts = header.split(",")
    if len(parts) != 3 or parts[0] != "ZRS1":
        raise CorruptSnapshot(f"bad snapshot header in {path}")
    offset = int(parts[1])
    if hashlib.sha256(body.encode("utf-8")).hexdigest() != parts[2]:
        raise CorruptSnapshot(f"snapshot hash mismatch in {path}")
    replica = ReplicaState(node_id=node_id, role=role)
    accounts: dict[str, Account] = {}
    for line in body.splitlines():
        if line:
            replay_entry(replica, accounts, line)
    normalize_journeys(replica)
    return offset, replica, accounts


def _snapshot_files(data_dir: Path) -> list[Path]:
    d = Path(data_dir)
    if not d.is_dir():
        return []
    files = [p for p in d.iterdir() if p.name.startswith(SNAPSHOT_PREFIX) and p.suffix == SNAPSHOT_SUFFIX]
    return sorted(files, reverse=True)


def recover_state(data_dir: Path, node_id: str, role: NodeRole):
    """Rebuild state from the newest valid snapshot plus the log suffix;
    corrupt snapshots fall back to older ones and finally to full replay.
    Returns (replica, accounts, store_log)."""
    data_dir = Path(data_dir)
    base_offset = 0
    replica = ReplicaState(node_id=node_id, role=role)
    accounts: dict[str, Account] = {}
    for snap in _snapshot_files(data_dir):
        try:
            base_offset, replica, accounts = load_snapshot(snap, node_id, role)
            break
        except (CorruptSnapshot, ValueError) as exc:
            log.warning("ignoring unusable snapshot %s: %s", snap.name, exc)
    store = StoreLog(data_dir / LOG_FILENAME)
    for line in store.entries(from_offset=base_offset):
        replay_entry(replica, accounts, line)
    normalize_journeys(replica)
    mark_derived_records(replica)
    return replica, accounts, store


def replay_full(lines, node_id: str, role: NodeRole):
    """Replay a sequence of raw entry lines from genesis (the recovery
    oracle)."""
    replica = ReplicaState(node_id=node_id, role=role)
    accounts: dict[str, Account] = {}
    for line in lines:
        replay_entry(replica, accounts, line)
    normalize_journeys(replica)
    mark_derived_records(replica)
    return replica, accounts
