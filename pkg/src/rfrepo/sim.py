"""Deterministic simulated network for exercising replica synchronization.

Virtual time advances in integer rounds. All randomness (synthetic records,
message-loss draws) comes from one SplitMix64 stream seeded by the scenario,
so equal seeds produce bit-identical traces: the record stream is consumed
first (nodes in sorted order), then one loss draw per edge per round with
edges sorted lexicographically by (src, dst).
"""

from __future__ import annotations

import uuid
from dataclasses import dataclass, field

from .errors import InvalidScenario
from .model import (
    CANONICAL_BIN_HZ,
    Campaign,
    DeviceKind,
    FrequencySpan,
    GeoPoint,
    Journey,
    LwwStamp,
    make_record,
    parse_ring,
    ring_text,
)
from .state import Claim, ClaimEvent, ClaimState, NodeRole, ReplicaState
from .sync import apply_sync_round, central_reconcile, claim_transition, digest_text, make_digest

_MASK64 = (1 << 64) - 1

SYNTH_LOW_HZ = 470_000_000
SYNTH_HIGH_HZ = 790_000_000
SYNTH_EPOCH_MS = 1_500_000_000_000


class SplitMix64:
    """The reference SplitMix64 stream; fixed here so loss draws and traces
    reproduce across implementations."""

    def __init__(self, seed: int):
        self.state = seed & _MASK64

    def next_u64(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & _MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return z ^ (z >> 31)

    def next_unit(self) -> float:
        return self.next_u64() / 2.0**64


@dataclass(frozen=True)
class ClaimOp:
    round_no: int
    node_id: str
    kind: str  # SUBMIT | CONTEST
    claim_id: str
    claimant: str = ""
    span: FrequencySpan | None = None
    t0_ms: int = 0
    t1_ms: int = 0
    region: tuple[GeoPoint, ...] | None = None


@dataclass
class Scenario:
    seed: int
    nodes: list[tuple[str, NodeRole]]
    topology: list[tuple[str, str]]
    loss_prob: float
    rounds: int
    placement: dict[str, int] = field(default_factory=dict)
    claim_script: list[ClaimOp] = field(default_factory=list)


@dataclass
class SimTrace:
    seed: int
    events: list[str] = field(default_factory=list)
    divergence: list[int] = field(default_factory=list)
    convergence_round: int | None = None
    node_count: int = 0
    loss_prob: float = 0.0
    # final replica states, for inspection by tests and the CLI
    final_states: dict[str, ReplicaState] = field(default_factory=dict, repr=False)

    def summary_row(self) -> str:
        conv = "NONE" if self.convergence_round is None else str(self.convergence_round)
        return f"{self.seed},{self.node_count},{self.loss_prob:g},{conv}"

    def text(self) -> str:
        lines = [f"TRACE,{self.seed}"] + self.events + [f"SUMMARY,{self.summary_row()}"]
        return "\n".join(lines) + "\n"


def measure_divergence(states) -> int:
    """Number of distinct digests across the given replica states."""
    states = list(states)
    if not states:
        raise InvalidScenario("divergence of zero states")
    return len({digest_text(make_digest(s)) for s in states})


def sim_campaign_id(seed: int) -> str:
    return str(uuid.uuid5(uuid.NAMESPACE_URL, f"rfrepo:sim:campaign:{seed}"))


def _sim_journey_id(seed: int, node_id: str) -> str:
    return str(uuid.uuid5(uuid.NAMESPACE_URL, f"rfrepo:sim:journey:{seed}:{node_id}"))


def _validate(scenario: Scenario) -> str:
    if not scenario.nodes:
        raise InvalidScenario("scenario has no nodes")
    centrals = [n for n, role in scenario.nodes if role == NodeRole.CENTRAL]
    if len(centrals) != 1:
        raise InvalidScenario(f"exactly one CENTRAL node required, got {len(centrals)}")
    if not 0.0 <= scenario.loss_prob <= 1.0:
        raise InvalidScenario(f"loss_prob out of [0, 1]: {scenario.loss_prob}")
    names = {n for n, _ in scenario.nodes}
    for src, dst in scenario.topology:
        if src not in names or dst not in names:
            raise InvalidScenario(f"edge ({src}, {dst}) references unknown node")
    # connectivity to central, edges treated as bidirectional
    adj: dict[str, set[str]] = {n: set() for n in names}
    for src, dst in scenario.topology:
        adj[src].add(dst)
        adj[dst].add(src)
    seen = {centrals[0]}
    stack = [centrals[0]]
    while stack:
        for peer in adj[stack.pop()]:
            if peer not in seen:
                seen.add(peer)
                stack.append(peer)
    if seen != names:
        raise InvalidScenario(f"nodes unreachable from central: {sorted(names - seen)}")
    return centrals[0]


def _seed_records(scenario: Scenario, states: dict[str, ReplicaState], rng: SplitMix64):
    campaign_id = sim_campaign_id(scenario.seed)
    n_channels = (SYNTH_HIGH_HZ - SYNTH_LOW_HZ) // CANONICAL_BIN_HZ
    seq = 0
    for node_id in sorted(scenario.placement):
        count = scenario.placement[node_id]
        state = states[node_id]
        state.campaigns[campaign_id] = Campaign(
            campaign_id=campaign_id,
            name="sim",
            owner="sim",
            region=None,
            journeys=set(),
            meta_version=LwwStamp(0, node_id),
        )
        journey = Journey(
            journey_id=_sim_journey_id(scenario.seed, node_id),
            campaign_id=campaign_id,
            collector="sim",
            device_serial=f"SIM-{node_id}",
        )
        for _ in range(count):
            low = SYNTH_LOW_HZ + (rng.next_u64() % n_channels) * CANONICAL_BIN_HZ
            power = -100.0 + (rng.next_u64() % 601) / 10.0
            rec = make_record(
                DeviceKind.RFE,
                f"SIM-{node_id}",
                SYNTH_EPOCH_MS + seq,
                GeoPoint(0.0, 0.0),
                FrequencySpan(low, low + CANONICAL_BIN_HZ),
                CANONICAL_BIN_HZ,
                (power,),
            )
            seq += 1
            state.add_record(rec)
            journey.record_ids.append(rec.record_id)
        state.upsert_journey(journey)


def _apply_claim_op(op: ClaimOp, state: ReplicaState, round_no: int) -> bool:
    stamp = LwwStamp(round_no, state.node_id)
    if op.kind == "SUBMIT":
        if op.claim_id in state.claims or op.span is None or op.region is None:
            return False
        state.claims[op.claim_id] = Claim(
            claim_id=op.claim_id,
            claimant=op.claimant or state.node_id,
            span=op.span,
            region=op.region,
            t0_ms=op.t0_ms,
            t1_ms=op.t1_ms,
            state=ClaimState.PROPOSED,
            submitted=stamp,
            stamp=stamp,
        )
        return True
    if op.kind == "CONTEST":
        claim = state.claims.get(op.claim_id)
        if claim is None or claim.state != ClaimState.PROPOSED:
            return False
        state.claims[op.claim_id] = claim_transition(claim, ClaimEvent.CONTEST, state.role, stamp)
        return True
    return False


def run_simulation(scenario: Scenario) -> SimTrace:
    central_id = _validate(scenario)
    states = {
        node_id: ReplicaState(node_id=node_id, role=role) for node_id, role in scenario.nodes
    }
    rng = SplitMix64(scenario.seed)
    _seed_records(scenario, states, rng)

    trace = SimTrace(seed=scenario.seed, node_count=len(states), loss_prob=scenario.loss_prob)
    edges = sorted(scenario.topology)
    script = sorted(
        scenario.claim_script, key=lambda op: (op.round_no, op.node_id, op.claim_id, op.kind)
    )
    for round_no in range(1, scenario.rounds + 1):
        for op in script:
            if op.round_no == round_no and _apply_claim_op(op, states[op.node_id], round_no):
                trace.events.append(f"CLAIM-OP,{round_no},{op.node_id},{op.kind},{op.claim_id}")
        for src, dst in edges:
            if rng.next_unit() < scenario.loss_prob:
                trace.events.append(f"SYNC,{round_no},{src},{dst},LOST")
            else:
                apply_sync_round(states[src], states[dst])
                trace.events.append(f"SYNC,{round_no},{src},{dst},COMPLETED")
        decided = central_reconcile(states[central_id], LwwStamp(round_no, central_id))
        for claim in decided:
            trace.events.append(f"CLAIM-DECIDED,{round_no},{claim.claim_id},{claim.state.value}")
        div = measure_divergence(states.values())
        trace.divergence.append(div)
        trace.events.append(f"DIVERGENCE,{round_no},{div}")
        if div == 1 and trace.convergence_round is None:
            trace.convergence_round = round_no
    trace.final_states = states
    return trace


# ---------------------------------------------------------------------------
# scenario files

def scenario_text(s: Scenario) -> str:
    lines = [f"SCENARIO,{s.seed},{s.loss_prob:g},{s.rounds}"]
    for node_id, role in s.nodes:
        lines.append(f"NODE,{node_id},{role.value}")
    for src, dst in s.topology:
        lines.append(f"EDGE,{src},{dst}")
    for node_id in sorted(s.placement):
        lines.append(f"RECORDS,{node_id},{s.placement[node_id]}")
    for op in s.claim_script:
        if op.kind == "SUBMIT":
            lines.append(
                f"CLAIM,{op.round_no},{op.node_id},SUBMIT,{op.claim_id},{op.claimant},"
                f"{op.span.low_hz},{op.span.high_hz},{op.t0_ms},{op.t1_ms},{ring_text(op.region)}"
            )
        else:
            lines.append(f"CLAIM,{op.round_no},{op.node_id},{op.kind},{op.claim_id}")
    return "\n".join(lines) + "\n"


def parse_scenario(text: str) -> Scenario:
    seed = None
    loss = 0.0
    rounds = 0
    nodes: list[tuple[str, NodeRole]] = []
    topology: list[tuple[str, str]] = []
    placement: dict[str, int] = {}
    script: list[ClaimOp] = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        tag, _, rest = line.partition(",")
        try:
            if tag == "SCENARIO":
                seed_s, loss_s, rounds_s = rest.split(",")
                seed, loss, rounds = int(seed_s), float(loss_s), int(rounds_s)
            elif tag == "NODE":
                node_id, role = rest.split(",")
                nodes.append((node_id, NodeRole(role)))
            elif tag == "EDGE":
                src, dst = rest.split(",")
                topology.append((src, dst))
            elif tag == "RECORDS":
                node_id, count = rest.split(",")
                placement[node_id] = int(count)
            elif tag == "CLAIM":
                parts = rest.split(",")
                if parts[2] == "SUBMIT":
                    rnd, node_id, _, claim_id, claimant, low, high, t0, t1, region = parts
                    script.append(
                        ClaimOp(
                            round_no=int(rnd),
                            node_id=node_id,
                            kind="SUBMIT",
                            claim_id=claim_id,
                            claimant=claimant,
                            span=FrequencySpan(int(low), int(high)),
                            t0_ms=int(t0),
                            t1_ms=int(t1),
                            region=parse_ring(region),
                        )
                    )
                else:
                    rnd, node_id, kind, claim_id = parts
                    script.append(
                        ClaimOp(round_no=int(rnd), node_id=node_id, kind=kind, claim_id=claim_id)
                    )
            else:
                raise ValueError(f"unknown tag {tag!r}")
        except (ValueError, IndexError) as exc:
            raise InvalidScenario(f"scenario line {lineno}: {exc}") from exc
    if seed is None:
        raise InvalidScenario("missing SCENARIO header line")
    return Scenario(
        seed=seed,
        nodes=nodes,
        topology=topology,
        loss_prob=loss,
        rounds=rounds,
        placement=placement,
        claim_script=script,
    )


def star_scenario(seed: int, regional_count: int, loss_prob: float, rounds: int, records: int) -> Scenario:
    """Star of regional nodes around one central; records spread evenly."""
    nodes = [(f"region-{i}", NodeRole.REGIONAL) for i in range(1, regional_count + 1)]
    nodes.append(("central", NodeRole.CENTRAL))
    topology = [(f"region-{i}", "central") for i in range(1, regional_count + 1)]
    per = records // regional_count
    placement = {f"region-{i}": per for i in range(1, regional_count + 1)}
    placement[f"region-{regional_count}"] += records - per * regional_count
    return Scenario(
        seed=seed,
        nodes=nodes,
        topology=topology,
        loss_prob=loss_prob,
        rounds=rounds,
        placement=placement,
    )
