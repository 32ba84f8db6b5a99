"""Peer sync driver: periodically runs the digest/offer exchange with each
configured peer over the HTTP sync endpoints. Transport failures are logged,
counted, and retried on the next interval."""

from __future__ import annotations

import logging
import threading
from typing import Protocol

import httpx

from .repository import RepositoryNode
from .sync import parse_digest_text

log = logging.getLogger(__name__)


class PeerTransport(Protocol):
    def post(self, path: str, content: str) -> tuple[int, str]: ...


class HttpPeer:
    def __init__(self, base_url: str, token: str, timeout: float = 10.0):
        self.base_url = base_url.rstrip("/")
        self._client = httpx.Client(timeout=timeout)
        self._headers = {"Authorization": f"Bearer {token}", "Content-Type": "text/plain"}

    def post(self, path: str, content: str) -> tuple[int, str]:
        resp = self._client.post(self.base_url + path, content=content, headers=self._headers)
        return resp.status_code, resp.text


def sync_with_peer(repo: RepositoryNode, peer: PeerTransport) -> tuple[int, int]:
    """One full exchange: send our digest, merge the peer's offer, then send
    ours against the peer's digest. Returns (received, sent) record counts."""
    request = f"SYNC-DIGEST,{repo.config.node_id}\n" + repo.digest_payload()
    status, body = peer.post("/v1/sync/digest", request)
    if status != 200:
        raise RuntimeError(f"digest exchange failed with status {status}")
    peer_digest_text, offer_payload = _split_response(body)
    received, _ = repo.handle_offer(offer_payload)

    our_offer = repo.offer_for(parse_digest_text(peer_digest_text))
    request = f"SYNC-OFFER,{repo.config.node_id}\n" + our_offer
    status, body = peer.post("/v1/sync/offer", request)
    if status != 200:
        raise RuntimeError(f"offer exchange failed with status {status}")
    sent = _parse_ack(body)
    return received, sent


def _split_response(body: str) -> tuple[str, str]:
    digest_lines: list[str] = []
    offer_lines: list[str] = []
    target = digest_lines
    for line in body.splitlines():
        if line.startswith("SYNC-DIGEST"):
            continue
        if line.startswith("SYNC-OFFER"):
            target = offer_lines
            continue
        target.append(line)
    return "\n".join(digest_lines) + "\n", "\n".join(offer_lines) + "\n"


def _parse_ack(body: str) -> int:
    line = body.strip()
    if not line.startswith("SYNC-ACK,"):
        raise RuntimeError(f"bad sync acknowledgement: {line[:40]!r}")
    accepted, _ = line[len("SYNC-ACK,") :].split(",")
    return int(accepted)


class SyncDaemon(threading.Thread):
    """Background loop: one sync pass per interval against every peer."""

    def __init__(self, repo: RepositoryNode, peers: list[PeerTransport], interval_s: float):
        super().__init__(daemon=True, name="rfrepo-sync")
        self.repo = repo
        self.peers = peers
        self.interval_s = interval_s
        self._stop = threading.Event()

    def run_once(self) -> None:
        for peer in self.peers:
            stats = self.repo.sync_stats
            stats.attempts += 1
            try:
                received, sent = sync_with_peer(self.repo, peer)
                stats.records_received += received
                stats.records_sent += sent
            except Exception as exc:  # transport errors are non-fatal
                stats.failures += 1
                stats.last_error = str(exc)
                log.warning("sync with peer failed: %s", exc)

    def run(self) -> None:
        while not self._stop.wait(self.interval_s):
            self.run_once()

    def stop(self) -> None:
        self._stop.set()
