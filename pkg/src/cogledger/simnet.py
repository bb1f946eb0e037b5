"""Deterministic multi-node simulation: gossip, sync, partitions, healing.

Virtual-time discrete-event loop, single-threaded, fully seeded: identical
(config, script, seed) always produce byte-identical reports. Nodes are
tiny state machines over three message kinds (announce, request, response);
a partitioned message is dropped and counted, everything else is delivered
exactly once.

Single-proposer rotation means a height can only be sealed by the node
operating its scheduled validator, so partitioned chains stall rather than
fork; competing blocks only arise when two nodes share a validator key.
"""

from __future__ import annotations

import heapq
import json
import random
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

from . import keys
from .encoding import enc_uint, sha256
from .errors import Duplicate, InvalidScript, LedgerError, ValidationFailed
from .ledger import (
    Block,
    ChainState,
    ValidatorSet,
    fork_choice,
    header_hash,
    make_genesis,
    replay_chain,
    scheduled_validator,
)
from .memory import ingest
from .records import ActivityRecord, kind_from_name, make_activity

SIM_ACTOR = sha256(b"sim-actor")
SIM_SHELL = sha256(b"sim-shell")

MAX_TICKS = 1_000_000


# --- configuration -----------------------------------------------------------

@dataclass(frozen=True)
class SimConfig:
    node_count: int
    seed: int
    latency_min: int = 1
    latency_max: int = 3
    stakes: Optional[tuple[int, ...]] = None  # default: stake 1 per node
    assignment: Optional[tuple[int, ...]] = None  # validator index per node

    def resolved_stakes(self) -> tuple[int, ...]:
        return self.stakes if self.stakes is not None else (1,) * self.node_count

    def resolved_assignment(self) -> tuple[int, ...]:
        if self.assignment is not None:
            return self.assignment
        return tuple(range(self.node_count))

    def validate(self) -> None:
        if self.node_count < 1:
            raise InvalidScript("node_count must be >= 1")
        if not 0 <= self.latency_min <= self.latency_max:
            raise InvalidScript("latency range must satisfy 0 <= min <= max")
        assignment = self.resolved_assignment()
        if len(assignment) != self.node_count:
            raise InvalidScript("assignment must name a validator per node")
        stakes = self.resolved_stakes()
        if any(not 0 <= v < len(stakes) for v in assignment):
            raise InvalidScript("assignment references an unknown validator")


def validator_key_for(seed: int, index: int):
    return keys.key_from_seed(sha256(b"sim-validator" + enc_uint(seed) + enc_uint(index)))


# --- messages ----------------------------------------------------------------

@dataclass(frozen=True)
class BlockAnnounce:
    block: Block


@dataclass(frozen=True)
class BlockRequest:
    height: int


@dataclass(frozen=True)
class BlockResponse:
    block: Block


Message = Union[BlockAnnounce, BlockRequest, BlockResponse]


@dataclass(frozen=True, order=True)
class SimEvent:
    deliver_at: int
    seq: int
    sender: int = field(compare=False)
    recipient: int = field(compare=False)
    payload: Message = field(compare=False)


# --- scripted actions ----------------------------------------------------------

@dataclass(frozen=True)
class SubmitRecord:
    at: int
    node: int
    record: ActivityRecord


@dataclass(frozen=True)
class PartitionAction:
    at: int
    groups: tuple[frozenset[int], ...]


@dataclass(frozen=True)
class HealAction:
    at: int


@dataclass(frozen=True)
class StopAction:
    at: int


Action = Union[SubmitRecord, PartitionAction, HealAction, StopAction]


def _record_from_fields(fields: dict, at: int) -> ActivityRecord:
    try:
        kind = kind_from_name(fields["kind"])
    except KeyError:
        raise InvalidScript("submit_record needs a 'kind' field")
    try:
        return make_activity(
            actor=bytes.fromhex(fields["actor"]) if "actor" in fields else SIM_ACTOR,
            kind=kind,
            shell_id=bytes.fromhex(fields["shell_id"]) if "shell_id" in fields else SIM_SHELL,
            captured_at=int(fields.get("captured_at", at)),
            url=fields.get("url"),
            title=fields.get("title"),
            dwell_seconds=fields.get("dwell_seconds"),
            query_terms=fields.get("query_terms"),
            question_id=fields.get("question_id"),
            answer_value=fields.get("answer_value"),
        )
    except (ValueError, TypeError) as exc:
        raise InvalidScript(f"bad record fields: {exc}")


def parse_script(text: str, config: SimConfig) -> list[Action]:
    """Scenario script: JSON object with an 'actions' list; every action has
    'at' (tick) and 'action' in submit_record | partition | heal | stop."""
    try:
        blob = json.loads(text)
        raw_actions = blob["actions"]
    except (ValueError, KeyError, TypeError) as exc:
        raise InvalidScript(f"unparseable script: {exc}")
    actions: list[Action] = []
    for raw in raw_actions:
        try:
            at = int(raw["at"])
            name = raw["action"]
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidScript(f"action missing at/action: {exc}")
        if at < 0:
            raise InvalidScript(f"negative tick {at}")
        if name == "submit_record":
            node = int(raw.get("node", -1))
            if not 0 <= node < config.node_count:
                raise InvalidScript(f"submit_record to unknown node {node}")
            rec = _record_from_fields(raw.get("record", {}), at)
            from .records import validate_activity

            try:
                validate_activity(rec)
            except ValidationFailed as exc:
                raise InvalidScript(f"invalid record at tick {at}: {exc}")
            actions.append(SubmitRecord(at, node, rec))
        elif name == "partition":
            groups = raw.get("groups")
            if not isinstance(groups, list) or not groups:
                raise InvalidScript("partition needs non-empty 'groups'")
            sets = tuple(frozenset(int(n) for n in g) for g in groups)
            flat = [n for g in sets for n in g]
            if sorted(flat) != list(range(config.node_count)):
                raise InvalidScript("partition groups must cover every node exactly once")
            actions.append(PartitionAction(at, sets))
        elif name == "heal":
            actions.append(HealAction(at))
        elif name == "stop":
            actions.append(StopAction(at))
        else:
            raise InvalidScript(f"unknown action {name!r}")
    return actions


# --- node state machine -----------------------------------------------------------

class SimNode:
    """One simulated node: a chain, a pending pool, and gossip handling."""

    def __init__(self, node_id: int, vset: ValidatorSet, genesis: Block, validator_key):
        self.node_id = node_id
        self.validator_key = validator_key
        self.validator_id = keys.account_id(keys.public_bytes(validator_key))
        self.vset = vset
        self.genesis = genesis
        self.chain = ChainState(vset, genesis, SIM_ACTOR)
        self.pending: list[ActivityRecord] = []
        self.pending_ids: set[bytes] = set()
        self.block_pool: dict[bytes, Block] = {}
        self.peers: tuple[int, ...] = ()
        self.sent = 0
        self.received = 0
        self.invalid_dropped = 0
        self.rejected_submits = 0

    # -- chain helpers --

    def _chain_hash_at(self) -> dict[bytes, int]:
        return {header_hash(b.header): b.header.height for b in self.chain.blocks}

    def head_block(self) -> Block:
        return self.chain.blocks[-1]

    def submit(self, record: ActivityRecord) -> None:
        try:
            ingest(record, self.pending, self.chain.memory, self.pending_ids)
        except (Duplicate, ValidationFailed):
            self.rejected_submits += 1

    def try_seal(self, tick: int) -> Optional[Block]:
        if not self.pending:
            return None
        if scheduled_validator(self.vset, self.chain.height + 1) != self.validator_id:
            return None
        batch = self.pending[:1024]
        block = self.chain.seal(batch, self.validator_key, tick)
        self.chain.apply_block(block)
        del self.pending[: len(batch)]
        for rec in batch:
            self.pending_ids.discard(rec.record_id)
        self.block_pool[header_hash(block.header)] = block
        return block

    def _drop_sealed_from_pending(self) -> None:
        """After adopting foreign blocks, forget pending records they carry."""
        if not self.pending:
            return
        keep = [r for r in self.pending if r.record_id not in self.chain.memory]
        self.pending = keep
        self.pending_ids = {r.record_id for r in keep}

    # -- message handling --

    def on_receive(self, sender: int, payload: Message) -> list[tuple[int, Message]]:
        """Returns outgoing (recipient, payload) pairs."""
        self.received += 1
        if isinstance(payload, BlockRequest):
            if 0 <= payload.height <= self.chain.height:
                return [(sender, BlockResponse(self.chain.blocks[payload.height]))]
            return []
        if isinstance(payload, (BlockAnnounce, BlockResponse)):
            return self._handle_block(sender, payload.block)
        return []

    def _handle_block(self, sender: int, block: Block) -> list[tuple[int, Message]]:
        h = header_hash(block.header)
        known = self._chain_hash_at()
        if h in known:
            return []
        self.block_pool[h] = block

        head = self.chain.head
        out: list[tuple[int, Message]] = []
        if block.header.prev_hash == self.chain.head_hash and block.header.height == head.height + 1:
            if self.chain.validate_block(block):
                self.invalid_dropped += 1
                return []
            self.chain.apply_block(block)
            self._drop_sealed_from_pending()
            out.extend(self._announce(block, exclude=sender))
            out.extend(self._connect_orphans(exclude=sender))
            return out

        if block.header.height > head.height + 1:
            # parent unknown: back-fill the gap from the sender
            for missing in range(head.height + 1, block.header.height):
                out.append((sender, BlockRequest(missing)))
            return out

        # same height or lower: potential fork, let fork choice decide
        candidate = fork_choice([head, block.header])
        if candidate == head:
            return []
        adopted = self._try_adopt_branch(block)
        if adopted:
            out.extend(self._announce(self.head_block(), exclude=sender))
            out.extend(self._connect_orphans(exclude=sender))
        return out

    def _try_adopt_branch(self, tip: Block) -> bool:
        """Rebuild state along a competing branch ending at tip."""
        known = self._chain_hash_at()
        branch: list[Block] = []
        cursor = tip
        while True:
            branch.append(cursor)
            prev = cursor.header.prev_hash
            if prev in known:
                fork_height = known[prev]
                break
            nxt = self.block_pool.get(prev)
            if nxt is None:
                return False  # branch not fully known yet
            cursor = nxt
        branch.reverse()
        abandoned = self.chain.blocks[fork_height + 1 :]
        blocks = self.chain.blocks[: fork_height + 1] + branch
        state, violations = replay_chain(blocks, self.vset, SIM_ACTOR)
        if violations or state is None:
            self.invalid_dropped += 1
            return False
        self.chain = state
        # records orphaned by the reorg go back to the pending pool
        for block in abandoned:
            for rec in block.records:
                if (
                    isinstance(rec, ActivityRecord)
                    and rec.record_id not in self.chain.memory
                    and rec.record_id not in self.pending_ids
                ):
                    self.pending.append(rec)
                    self.pending_ids.add(rec.record_id)
        self._drop_sealed_from_pending()
        return True

    def _connect_orphans(self, exclude: int) -> list[tuple[int, Message]]:
        out: list[tuple[int, Message]] = []
        progress = True
        while progress:
            progress = False
            for h in sorted(self.block_pool):
                block = self.block_pool[h]
                if (
                    block.header.prev_hash == self.chain.head_hash
                    and block.header.height == self.chain.height + 1
                ):
                    if self.chain.validate_block(block):
                        self.invalid_dropped += 1
                        del self.block_pool[h]
                        break
                    self.chain.apply_block(block)
                    self._drop_sealed_from_pending()
                    out.extend(self._announce(block, exclude=exclude))
                    progress = True
                    break
        return out

    def _announce(self, block: Block, exclude: int = -1) -> list[tuple[int, Message]]:
        return [
            (peer, BlockAnnounce(block)) for peer in self.peers if peer != exclude
        ]


# --- reports ------------------------------------------------------------------------

@dataclass(frozen=True)
class NodeReport:
    node_id: int
    head_hash: str
    head_height: int
    block_count: int
    pending: int
    sent: int
    received: int
    invalid_dropped: int
    rejected_submits: int


@dataclass(frozen=True)
class SimReport:
    final_tick: int
    delivered: int
    dropped_partition: int
    nodes: tuple[NodeReport, ...]

    def render(self) -> str:
        lines = [
            f"final_tick={self.final_tick} delivered={self.delivered} "
            f"dropped_partition={self.dropped_partition}"
        ]
        for n in self.nodes:
            lines.append(
                f"node {n.node_id}: head={n.head_hash} height={n.head_height} "
                f"blocks={n.block_count} pending={n.pending} sent={n.sent} "
                f"received={n.received} invalid={n.invalid_dropped} "
                f"rejected={n.rejected_submits}"
            )
        return "\n".join(lines) + "\n"

    def head_hashes(self) -> set[str]:
        return {n.head_hash for n in self.nodes}


# --- the simulation loop ---------------------------------------------------------------

class Simulation:
    def __init__(self, config: SimConfig, actions: Sequence[Action]):
        config.validate()
        self.config = config
        self.actions = sorted(
            enumerate(actions), key=lambda pair: (pair[1].at, pair[0])
        )
        self.rng = random.Random(config.seed)

        stakes = config.resolved_stakes()
        validator_keys = [validator_key_for(config.seed, i) for i in range(len(stakes))]
        vset = ValidatorSet.from_pubkeys(
            [(keys.public_bytes(k), stakes[i]) for i, k in enumerate(validator_keys)]
        )
        genesis = make_genesis(vset, validator_keys[0])
        assignment = config.resolved_assignment()
        self.nodes = [
            SimNode(i, vset, genesis, validator_keys[assignment[i]])
            for i in range(config.node_count)
        ]
        for node in self.nodes:
            node.peers = tuple(p for p in range(config.node_count) if p != node.node_id)

        self.queue: list[SimEvent] = []
        self.seq = 0
        self.partition: Optional[tuple[frozenset[int], ...]] = None
        self.delivered = 0
        self.dropped_partition = 0
        self.tick = 0
        self.stopped = False

    def _reachable(self, a: int, b: int) -> bool:
        if self.partition is None:
            return True
        return any(a in group and b in group for group in self.partition)

    def _send(self, sender: int, recipient: int, payload: Message) -> None:
        self.nodes[sender].sent += 1
        if not self._reachable(sender, recipient):
            self.dropped_partition += 1
            return
        latency = self.rng.randint(self.config.latency_min, self.config.latency_max)
        event = SimEvent(self.tick + latency, self.seq, sender, recipient, payload)
        self.seq += 1
        heapq.heappush(self.queue, event)

    def _send_all(self, sender: int, messages: list[tuple[int, Message]]) -> None:
        for recipient, payload in messages:
            self._send(sender, recipient, payload)

    def _apply_action(self, action: Action) -> None:
        if isinstance(action, SubmitRecord):
            self.nodes[action.node].submit(action.record)
        elif isinstance(action, PartitionAction):
            self.partition = action.groups
            # in-flight messages crossing the new boundary are lost
            survivors = []
            for ev in self.queue:
                if self._reachable(ev.sender, ev.recipient):
                    survivors.append(ev)
                else:
                    self.dropped_partition += 1
            self.queue = survivors
            heapq.heapify(self.queue)
        elif isinstance(action, HealAction):
            self.partition = None
            # every node nudges its peers with its current head
            for node in self.nodes:
                self._send_all(
                    node.node_id, node._announce(node.head_block())
                )
        elif isinstance(action, StopAction):
            self.stopped = True

    def run(self) -> SimReport:
        pending_actions = list(self.actions)
        while self.tick <= MAX_TICKS and not self.stopped:
            progressed = False

            while pending_actions and pending_actions[0][1].at <= self.tick:
                _, action = pending_actions.pop(0)
                self._apply_action(action)
                progressed = True
                if self.stopped:
                    break
            if self.stopped:
                break

            while self.queue and self.queue[0].deliver_at <= self.tick:
                ev = heapq.heappop(self.queue)
                self.delivered += 1
                out = self.nodes[ev.recipient].on_receive(ev.sender, ev.payload)
                self._send_all(ev.recipient, out)
                progressed = True

            for node in self.nodes:
                block = node.try_seal(self.tick)
                if block is not None:
                    self._send_all(node.node_id, node._announce(block))
                    progressed = True

            if not progressed and not self.queue and not pending_actions:
                break
            self.tick += 1

        return self.report()

    def report(self) -> SimReport:
        return SimReport(
            final_tick=self.tick,
            delivered=self.delivered,
            dropped_partition=self.dropped_partition,
            nodes=tuple(
                NodeReport(
                    node_id=n.node_id,
                    head_hash=n.chain.head_hash.hex(),
                    head_height=n.chain.height,
                    block_count=len(n.chain.blocks),
                    pending=len(n.pending),
                    sent=n.sent,
                    received=n.received,
                    invalid_dropped=n.invalid_dropped,
                    rejected_submits=n.rejected_submits,
                )
                for n in self.nodes
            ),
        )


def run(config: SimConfig, script: Sequence[Action] | str) -> SimReport:
    """Run a scenario to completion (stop action, quiescence, or tick cap)."""
    actions = parse_script(script, config) if isinstance(script, str) else list(script)
    return Simulation(config, actions).run()
