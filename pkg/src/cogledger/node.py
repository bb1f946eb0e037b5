"""Live node: HTTP/JSON API over the chain, registry, store, memory pool,
and learning passes, with capability-scoped shell authorization.

Every state-mutating call travels through one ordered command queue drained
by a single consumer thread; the sealing loop is a command like any other,
so there is exactly one writer to chain state. Reads hit immutable sealed
state. Shells authenticate with bearer secrets issued at grant approval;
the owner authenticates by signing (method, path, body) with the account
key and passes every scope check.
"""

from __future__ import annotations

import argparse
import configparser
import json
import os
import queue
import threading
import time
from concurrent.futures import Future
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse, Response

from . import keys
from .encoding import from_micro, sha256
from .errors import (
    Duplicate,
    DuplicateTokenId,
    EmptyWindow,
    InsufficientBalance,
    IntegrityFailure,
    LedgerError,
    MixedActors,
    NoSignal,
    NotFound,
    NotOwner,
    QueueFull,
    StorageFull,
    TokenBurned,
    UnknownQuestion,
    UnknownToken,
    ValidationFailed,
    WeightOnNonKnowledge,
)
from .grants import STATUS_APPROVED, STATUS_PENDING, GrantsState, apply_grant_event
from .keys import KeyFile
from .learning import (
    QuizDefinition,
    RefineInput,
    RefineParams,
    codify,
    decode_model,
    decode_payload,
    default_quiz,
    encode_quiz_evidence,
    load_quiz,
    predict_salience,
    score_quiz,
    train_preference_model,
)
from .ledger import (
    ChainState,
    ValidatorSet,
    append_block_file,
    load_chain,
    make_genesis,
    parse_validators_config,
    write_chain_file,
)
from .memory import QueryFilter, query
from .records import (
    ActivityKind,
    ActivityRecord,
    GrantApproved,
    GrantRegistered,
    GrantRevoked,
    LedgerRecord,
    MintNft,
    NftMetadata,
    Scope,
    TokenClass,
    class_name,
    kind_from_name,
    kind_name,
    make_activity,
    make_grant_registration,
    scope_from_name,
    scope_name,
    sign_token_op,
    validate_activity,
)
from .registry import apply_op, assets_of

WALLET_SHELL_ID = sha256(b"cogledger-wallet")

MAX_RECORDS_BEFORE_SEAL = 1024


class ApiError(LedgerError):
    def __init__(self, status: int, code: str, message: str):
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message


_ERROR_STATUS: list[tuple[type, int, str]] = [
    (Duplicate, 409, "duplicate"),
    (DuplicateTokenId, 409, "duplicate_token"),
    (TokenBurned, 409, "token_burned"),
    (EmptyWindow, 409, "empty_window"),
    (MixedActors, 409, "mixed_actors"),
    (NoSignal, 409, "no_signal"),
    (InsufficientBalance, 409, "insufficient_balance"),
    (WeightOnNonKnowledge, 409, "weight_on_non_knowledge"),
    (UnknownToken, 404, "unknown_token"),
    (NotFound, 404, "not_found"),
    (NotOwner, 403, "not_owner"),
    (UnknownQuestion, 400, "unknown_question"),
    (ValidationFailed, 400, "validation_failed"),
    (QueueFull, 503, "queue_full"),
    (StorageFull, 503, "storage_full"),
    (IntegrityFailure, 500, "integrity_failure"),
]


def _to_api_error(exc: LedgerError) -> ApiError:
    for etype, status, code in _ERROR_STATUS:
        if isinstance(exc, etype):
            return ApiError(status, code, str(exc))
    return ApiError(500, "internal", str(exc))


def owner_request_message(method: str, path_qs: str, body: bytes) -> bytes:
    """Bytes the owner signs for an authenticated request."""
    return method.upper().encode() + b"\n" + path_qs.encode() + b"\n" + body


@dataclass
class NodeParams:
    reward: int = 10
    codify_k: int = 10
    refine: RefineParams = RefineParams()
    seal_interval: float = 2.0
    queue_size: int = 10000
    store_capacity: int = 1 << 30


class NodeService:
    """Everything behind the API: chain, store, pending pool, grants."""

    def __init__(
        self,
        data_dir: str | Path,
        keyfile: KeyFile,
        validator_set: ValidatorSet,
        quiz: Optional[QuizDefinition] = None,
        params: NodeParams = NodeParams(),
        clock: Callable[[], float] = time.time,
    ):
        from .store import ContentStore

        self.data_dir = Path(data_dir)
        self.data_dir.mkdir(parents=True, exist_ok=True)
        self.keyfile = keyfile
        self.validator_set = validator_set
        self.owner_account = keyfile.account_id
        self.quiz = quiz or default_quiz()
        self.params = params
        self.clock = clock
        self.store = ContentStore(self.data_dir / "store", params.store_capacity)

        self.chain_path = self.data_dir / "chain.dat"
        if self.chain_path.exists():
            self.chain = load_chain(self.chain_path, validator_set, self.owner_account)
        else:
            genesis = make_genesis(validator_set, keyfile.validator_key)
            self.chain = ChainState(validator_set, genesis, self.owner_account)
            write_chain_file(self.chain_path, self.chain.blocks)

        # pending pool plus the scratch state it has been validated against
        self._pending: list[LedgerRecord] = []
        self._scratch_registry = self.chain.registry
        self._scratch_grants = self.chain.grants
        self._pending_activity_ids: set[bytes] = set()

        self.hit_counters: dict[bytes, int] = {}
        self._lock = threading.RLock()

        self._commands: queue.Queue = queue.Queue(maxsize=params.queue_size)
        self._consumer = threading.Thread(target=self._drain, daemon=True)
        self._closing = False
        self._sealer: Optional[threading.Thread] = None
        self._consumer.start()

    # ---- command plumbing ----

    def _drain(self) -> None:
        while True:
            item = self._commands.get()
            if item is None:
                return
            fn, future = item
            try:
                future.set_result(fn())
            except BaseException as exc:  # surfaced to the waiting caller
                future.set_exception(exc)

    def execute(self, fn: Callable):
        """Serialize a mutation through the command queue and wait for it."""
        future: Future = Future()
        try:
            self._commands.put_nowait((fn, future))
        except queue.Full:
            raise QueueFull("command queue is full")
        return future.result(timeout=30)

    def start_sealer(self) -> None:
        def loop():
            while not self._closing:
                time.sleep(self.params.seal_interval)
                try:
                    self.execute(lambda: self._do_seal())
                except (QueueFull, LedgerError):
                    pass

        self._sealer = threading.Thread(target=loop, daemon=True)
        self._sealer.start()

    def close(self) -> None:
        self._closing = True
        self._commands.put(None)
        self._consumer.join(timeout=5)

    # ---- authorization ----

    def authorize_bearer(self, token: Optional[bytes], scope: Scope) -> bytes:
        """Returns the shell_id behind an approved grant carrying the scope.
        Raises ApiError 401 for unknown tokens, 403 for known-but-denied."""
        if not token:
            raise ApiError(401, "unauthenticated", "missing bearer token")
        with self._lock:
            hit = self._scratch_grants.by_secret_hash(sha256(token))
        if hit is None:
            raise ApiError(401, "unauthenticated", "unknown bearer token")
        _, info = hit
        if info.status != STATUS_APPROVED:
            raise ApiError(403, "forbidden", f"grant is {info.status}")
        if scope not in info.scopes:
            raise ApiError(403, "forbidden", f"grant lacks scope {scope_name(scope)}")
        return info.shell_id

    def verify_owner(self, method: str, path_qs: str, body: bytes,
                     pubkey_hex: Optional[str], signature_hex: Optional[str]) -> bool:
        if not pubkey_hex or not signature_hex:
            return False
        try:
            pubkey = bytes.fromhex(pubkey_hex)
            signature = bytes.fromhex(signature_hex)
        except ValueError:
            return False
        if keys.account_id(pubkey) != self.owner_account:
            return False
        return keys.verify(pubkey, signature, owner_request_message(method, path_qs, body))

    # ---- pending-pool helpers (consumer thread only) ----

    def _append_record(self, record: LedgerRecord) -> None:
        from .records import validate_record

        validate_record(record)
        if isinstance(record, ActivityRecord):
            if (
                record.record_id in self.chain.memory
                or record.record_id in self._pending_activity_ids
            ):
                raise Duplicate(record.record_id.hex())
            self._pending_activity_ids.add(record.record_id)
        elif isinstance(record, (GrantRegistered, GrantApproved, GrantRevoked)):
            self._scratch_grants = apply_grant_event(self._scratch_grants, record)
        else:
            self._scratch_registry = apply_op(self._scratch_registry, record)
        self._pending.append(record)
        if len(self._pending) >= MAX_RECORDS_BEFORE_SEAL:
            self._do_seal()

    def _do_seal(self) -> int:
        """Drain pending records into blocks. Returns blocks sealed."""
        sealed = 0
        now = int(self.clock())
        while self._pending:
            batch = self._pending[:MAX_RECORDS_BEFORE_SEAL]
            block = self.chain.seal(batch, self.keyfile.validator_key, now)
            self.chain.apply_block(block)
            append_block_file(self.chain_path, block)
            del self._pending[: len(batch)]
            sealed += 1
        with self._lock:
            self._scratch_registry = self.chain.registry
            self._scratch_grants = self.chain.grants
            self._pending_activity_ids = set()
        return sealed

    def seal_now(self) -> int:
        return self.execute(self._do_seal)

    # ---- mutations (each runs on the consumer thread via execute) ----

    def register_shell(self, display_name: str, scopes: list[str],
                       autonomy_level: int, shell_id_hex: Optional[str]) -> dict:
        parsed_scopes = [scope_from_name(s) for s in scopes]
        if shell_id_hex:
            shell_id = _hex_hash(shell_id_hex, "shell_id")
        else:
            shell_id = sha256(display_name.encode("utf-8"))
        if not 0 <= autonomy_level <= 4:
            raise ValidationFailed("autonomy_level", "must be in 0..4")

        def run():
            ev = make_grant_registration(
                shell_id, display_name, parsed_scopes, autonomy_level, int(self.clock())
            )
            self._append_record(ev)
            return {
                "grant_id": ev.grant_id.hex(),
                "shell_id": shell_id.hex(),
                "status": STATUS_PENDING,
            }

        return self.execute(run)

    def approve_grant(self, grant_id_hex: str) -> dict:
        grant_id = _hex_hash(grant_id_hex, "grant_id")

        def run():
            info = self._scratch_grants.grants.get(grant_id)
            if info is None:
                raise UnknownToken(f"grant {grant_id_hex}")
            secret = os.urandom(32)
            ev = GrantApproved(grant_id, sha256(secret), int(self.clock()))
            self._append_record(ev)
            # the secret is returned exactly once and never stored
            return {
                "grant_id": grant_id_hex,
                "secret": secret.hex(),
                "status": STATUS_APPROVED,
            }

        return self.execute(run)

    def revoke_grant(self, grant_id_hex: str) -> dict:
        grant_id = _hex_hash(grant_id_hex, "grant_id")

        def run():
            if grant_id not in self._scratch_grants.grants:
                raise UnknownToken(f"grant {grant_id_hex}")
            ev = GrantRevoked(grant_id, int(self.clock()))
            self._append_record(ev)
            return {"grant_id": grant_id_hex, "status": "revoked"}

        return self.execute(run)

    def submit_activity(self, body: dict, shell_id: bytes) -> dict:
        kind = kind_from_name(_require(body, "kind", str))
        record = make_activity(
            actor=self.owner_account,
            kind=kind,
            shell_id=shell_id,
            captured_at=int(body.get("captured_at", self.clock())),
            url=_optional(body, "url", str),
            title=_optional(body, "title", str),
            dwell_seconds=_optional(body, "dwell_seconds", int),
            query_terms=body.get("query_terms"),
            question_id=_optional(body, "question_id", str),
            answer_value=_optional(body, "answer_value", int),
        )
        validate_activity(record)

        def run():
            self._append_record(record)
            return {"record_id": record.record_id.hex()}

        return self.execute(run)

    def submit_quiz_answers(self, answers_raw: dict, shell_id: bytes) -> dict:
        answers: dict[str, int] = {}
        for qid, value in answers_raw.items():
            if not isinstance(qid, str) or not isinstance(value, int):
                raise ValidationFailed("answers", "must map question_id to integer")
            answers[qid] = value
        result = score_quiz(self.quiz, answers)  # validates ids and ranges

        def run():
            now = int(self.clock())
            recorded = []
            for qid in sorted(answers):
                rec = make_activity(
                    actor=self.owner_account,
                    kind=ActivityKind.QUIZ_ANSWER,
                    shell_id=shell_id,
                    captured_at=now,
                    question_id=qid,
                    answer_value=answers[qid],
                )
                self._append_record(rec)
                recorded.append(rec.record_id.hex())
            out = {"recorded": recorded}
            complete = set(answers) == {q.question_id for q in self.quiz.questions}
            if complete:
                evidence = encode_quiz_evidence(answers, result)
                address = self.store.put(evidence)
                metadata = NftMetadata(
                    token_class=TokenClass.PERSONALITY_BADGE,
                    content_hash=address,
                    schema_version=1,
                    trait_code=result.code,
                    weight_micro=None,
                    issuer=self.owner_account,
                )
                mint = sign_token_op(
                    MintNft(bytes(32), metadata, self.owner_account),
                    self.keyfile.account_key,
                )
                self._append_record(mint)
                out["badge"] = {
                    "token_id": mint.token_id.hex(),
                    "trait_code": result.code,
                    "axis_scores": list(result.axis_scores),
                }
            return out

        return self.execute(run)

    def run_codify(self, k: Optional[int], from_ts: Optional[int],
                   to_ts: Optional[int]) -> dict:
        def run():
            recs = query(self.chain.memory, QueryFilter(from_ts=from_ts, to_ts=to_ts))
            payload, mint, incentive = codify(
                recs,
                k or self.params.codify_k,
                agent=self.owner_account,
                store=self.store,
                reward_amount=self.params.reward,
            )
            mint = sign_token_op(mint, self.keyfile.account_key)
            incentive = sign_token_op(incentive, self.keyfile.account_key)
            self._append_record(mint)
            self._append_record(incentive)
            return {
                "token_id": mint.token_id.hex(),
                "content_root": mint.metadata.content_hash.root.hex(),
                "content_len": mint.metadata.content_hash.total_len,
                "terms": len(payload.vocabulary),
                "mentions": len(payload.mentions),
                "sources": len(payload.source_record_ids),
                "reward": incentive.amount,
            }

        return self.execute(run)

    def run_refine(self) -> dict:
        def run():
            now = int(self.clock())
            inputs = []
            for token_id in self.chain.mint_order:
                entry = self.chain.registry.nfts.get(token_id)
                if (
                    entry is not None
                    and entry.alive
                    and entry.metadata.token_class is TokenClass.KNOWLEDGE_OBJECT
                ):
                    inputs.append(
                        RefineInput(
                            token_id=token_id,
                            weight_micro=entry.metadata.weight_micro,
                            mint_time=self.chain.mint_times[token_id],
                            hit_count=self.hit_counters.get(token_id, 0),
                        )
                    )
            from .learning import refine

            updates, burns = refine(inputs, now, self.params.refine)
            for op in updates + burns:
                self._append_record(sign_token_op(op, self.keyfile.account_key))
            with self._lock:
                self.hit_counters = {}
            return {"inputs": len(inputs), "updates": len(updates), "burns": len(burns)}

        return self.execute(run)

    def run_train(self) -> dict:
        def run():
            objects = []
            for token_id in self.chain.mint_order:
                entry = self.chain.registry.nfts.get(token_id)
                if (
                    entry is not None
                    and entry.alive
                    and entry.metadata.token_class is TokenClass.KNOWLEDGE_OBJECT
                ):
                    payload = decode_payload(self.store.get(entry.metadata.content_hash))
                    objects.append((token_id, payload, entry.metadata.weight_micro))
            if not objects:
                raise NoSignal("no knowledge objects to train from")
            model, mint = train_preference_model(objects, self.store, self.owner_account)
            mint = sign_token_op(mint, self.keyfile.account_key)
            self._append_record(mint)
            return {
                "token_id": mint.token_id.hex(),
                "terms": len(model.weights),
                "built_from": [t.hex() for t in model.built_from],
            }

        return self.execute(run)

    def burn_token(self, token_id_hex: str) -> dict:
        token_id = _hex_hash(token_id_hex, "token_id")

        def run():
            from .records import Burn, BURN_OWNER_REQUEST

            op = sign_token_op(
                Burn(token_id, BURN_OWNER_REQUEST), self.keyfile.account_key
            )
            self._append_record(op)
            return {"token_id": token_id_hex, "status": "burned"}

        return self.execute(run)

    # ---- reads (sealed chain state) ----

    def asset_view(self) -> dict:
        view = assets_of(self.chain.registry, self.owner_account)

        def item(token_id: bytes, entry) -> dict:
            meta = entry.metadata
            out = {
                "token_id": token_id.hex(),
                "class": class_name(meta.token_class),
                "content_root": meta.content_hash.root.hex(),
                "content_len": meta.content_hash.total_len,
                "schema_version": meta.schema_version,
                "issuer": meta.issuer.hex(),
            }
            if meta.trait_code is not None:
                out["trait_code"] = meta.trait_code
            if meta.weight_micro is not None:
                out["weight"] = from_micro(meta.weight_micro)
            return out

        return {
            "account": view.account.hex(),
            "balance": view.balance,
            "badges": [item(t, e) for t, e in view.badges],
            "knowledge": [item(t, e) for t, e in view.knowledge],
            "models": [item(t, e) for t, e in view.models],
        }

    def records_view(self, kind: Optional[str], token: Optional[str],
                     from_ts: Optional[int], to_ts: Optional[int]) -> dict:
        flt = QueryFilter(
            from_ts=from_ts,
            to_ts=to_ts,
            kind=kind_from_name(kind) if kind else None,
            token=token,
        )
        return {"records": [activity_to_json(r) for r in query(self.chain.memory, flt)]}

    def knowledge_bytes(self, token_id_hex: str) -> bytes:
        token_id = _hex_hash(token_id_hex, "token_id")
        entry = self.chain.registry.nfts.get(token_id)
        if entry is None or not entry.alive:
            raise NotFound(f"knowledge object {token_id_hex}")
        data = self.store.get(entry.metadata.content_hash)
        with self._lock:
            self.hit_counters[token_id] = self.hit_counters.get(token_id, 0) + 1
        return data

    def quiz_view(self) -> dict:
        return {
            "questions": [
                {
                    "question_id": q.question_id,
                    "text": q.text,
                    "axis": q.axis,
                    "polarity": q.polarity,
                }
                for q in self.quiz.questions
            ]
        }

    def salience(self, text: str) -> dict:
        token_id = self.chain.latest_model_token()
        if token_id is None:
            raise NotFound("no model minted yet")
        entry = self.chain.registry.nfts[token_id]
        model = decode_model(self.store.get(entry.metadata.content_hash))
        return {"score": predict_salience(model, text), "model": token_id.hex()}

    def head_view(self) -> dict:
        head = self.chain.head
        return {
            "height": head.height,
            "hash": self.chain.head_hash.hex(),
            "prev_hash": head.prev_hash.hex(),
            "merkle_root": head.merkle_root.hex(),
            "timestamp": head.timestamp,
            "validator_id": head.validator_id.hex(),
        }

    def pending_grants_view(self) -> dict:
        with self._lock:
            rows = self._scratch_grants.pending()
        return {"grants": [_grant_json(gid, info) for gid, info in rows]}


def _grant_json(grant_id: bytes, info) -> dict:
    return {
        "grant_id": grant_id.hex(),
        "shell_id": info.shell_id.hex(),
        "display_name": info.display_name,
        "scopes": [scope_name(s) for s in info.scopes],
        "autonomy_level": info.autonomy_level,
        "status": info.status,
        "created_at": info.created_at,
    }


def activity_to_json(rec: ActivityRecord) -> dict:
    out = {
        "record_id": rec.record_id.hex(),
        "actor": rec.actor.hex(),
        "kind": kind_name(rec.kind),
        "shell_id": rec.shell_id.hex(),
        "captured_at": rec.captured_at,
    }
    if rec.url is not None:
        out["url"] = rec.url
    if rec.title is not None:
        out["title"] = rec.title
    if rec.dwell_seconds is not None:
        out["dwell_seconds"] = rec.dwell_seconds
    if rec.query_terms is not None:
        out["query_terms"] = list(rec.query_terms)
    if rec.question_id is not None:
        out["question_id"] = rec.question_id
    if rec.answer_value is not None:
        out["answer_value"] = rec.answer_value
    return out


def _hex_hash(value: str, field: str) -> bytes:
    try:
        raw = bytes.fromhex(value)
    except ValueError:
        raise ValidationFailed(field, "not valid hex")
    if len(raw) != 32:
        raise ValidationFailed(field, "must be 32 bytes of hex")
    return raw


def _require(body: dict, field: str, typ) -> object:
    value = body.get(field)
    if not isinstance(value, typ):
        raise ValidationFailed(field, f"required {typ.__name__}")
    return value


def _optional(body: dict, field: str, typ):
    value = body.get(field)
    if value is None:
        return None
    if not isinstance(value, typ) or isinstance(value, bool):
        raise ValidationFailed(field, f"must be {typ.__name__}")
    return value


# --- HTTP layer -------------------------------------------------------------

def create_app(service: NodeService) -> FastAPI:
    app = FastAPI(title="cogledger node", docs_url=None, redoc_url=None)

    @app.exception_handler(ApiError)
    async def api_error_handler(_req, exc: ApiError):
        return JSONResponse(
            status_code=exc.status, content={"code": exc.code, "message": exc.message}
        )

    @app.exception_handler(RequestValidationError)
    async def validation_handler(_req, exc):
        return JSONResponse(
            status_code=400, content={"code": "bad_request", "message": str(exc)}
        )

    async def read_json(request: Request) -> tuple[dict, bytes]:
        body = await request.body()
        if not body:
            return {}, body
        try:
            parsed = json.loads(body)
        except ValueError:
            raise ApiError(400, "bad_request", "body is not valid JSON")
        if not isinstance(parsed, dict):
            raise ApiError(400, "bad_request", "body must be a JSON object")
        return parsed, body

    def path_qs(request: Request) -> str:
        qs = request.url.query
        return request.url.path + (f"?{qs}" if qs else "")

    async def owner_only(request: Request, body: bytes) -> None:
        ok = service.verify_owner(
            request.method,
            path_qs(request),
            body,
            request.headers.get("x-owner-pubkey"),
            request.headers.get("x-owner-signature"),
        )
        if not ok:
            raise ApiError(401, "unauthenticated", "owner signature required")

    async def scoped(request: Request, scope: Scope, body: bytes = b"") -> bytes:
        """Owner passes any scope; shells need an approved grant. Returns the
        shell id to attribute records to."""
        if service.verify_owner(
            request.method,
            path_qs(request),
            body,
            request.headers.get("x-owner-pubkey"),
            request.headers.get("x-owner-signature"),
        ):
            return WALLET_SHELL_ID
        auth = request.headers.get("authorization", "")
        token: Optional[bytes] = None
        if auth.lower().startswith("bearer "):
            try:
                token = bytes.fromhex(auth[7:].strip())
            except ValueError:
                token = None
        return service.authorize_bearer(token, scope)

    def wrap(fn):
        try:
            return fn()
        except ApiError:
            raise
        except LedgerError as exc:
            raise _to_api_error(exc)

    # -- open routes --

    @app.get("/chain/head")
    async def chain_head():
        return service.head_view()

    @app.post("/shells/register")
    async def register_shell(request: Request):
        body, _raw = await read_json(request)
        name = body.get("display_name")
        scopes = body.get("requested_scopes")
        if not isinstance(name, str) or not name:
            raise ApiError(400, "bad_request", "display_name required")
        if not isinstance(scopes, list) or not scopes:
            raise ApiError(400, "bad_request", "requested_scopes required")
        return wrap(
            lambda: service.register_shell(
                name, scopes, int(body.get("autonomy_level", 0)), body.get("shell_id")
            )
        )

    # -- owner routes --

    @app.get("/grants/pending")
    async def pending_grants(request: Request):
        await owner_only(request, b"")
        return service.pending_grants_view()

    @app.post("/grants/{grant_id}/approve")
    async def approve_grant(grant_id: str, request: Request):
        _body, raw = await read_json(request)
        await owner_only(request, raw)
        return wrap(lambda: service.approve_grant(grant_id))

    @app.post("/grants/{grant_id}/revoke")
    async def revoke_grant(grant_id: str, request: Request):
        _body, raw = await read_json(request)
        await owner_only(request, raw)
        return wrap(lambda: service.revoke_grant(grant_id))

    @app.post("/admin/codify")
    async def admin_codify(request: Request):
        body, raw = await read_json(request)
        await owner_only(request, raw)
        return wrap(
            lambda: service.run_codify(
                _optional(body, "k", int),
                _optional(body, "from_ts", int),
                _optional(body, "to_ts", int),
            )
        )

    @app.post("/admin/refine")
    async def admin_refine(request: Request):
        _body, raw = await read_json(request)
        await owner_only(request, raw)
        return wrap(service.run_refine)

    @app.post("/admin/train")
    async def admin_train(request: Request):
        _body, raw = await read_json(request)
        await owner_only(request, raw)
        return wrap(service.run_train)

    @app.post("/admin/seal")
    async def admin_seal(request: Request):
        _body, raw = await read_json(request)
        await owner_only(request, raw)
        return {"sealed_blocks": wrap(service.seal_now)}

    @app.post("/tokens/{token_id}/burn")
    async def burn_token(token_id: str, request: Request):
        _body, raw = await read_json(request)
        await owner_only(request, raw)
        return wrap(lambda: service.burn_token(token_id))

    # -- scoped shell routes --

    @app.post("/activities")
    async def post_activity(request: Request):
        body, raw = await read_json(request)
        shell_id = await scoped(request, Scope.SUBMIT_ACTIVITY, raw)
        return wrap(lambda: service.submit_activity(body, shell_id))

    @app.get("/records")
    async def get_records(request: Request):
        await scoped(request, Scope.READ_KNOWLEDGE)
        params = request.query_params
        try:
            from_ts = int(params["from_ts"]) if "from_ts" in params else None
            to_ts = int(params["to_ts"]) if "to_ts" in params else None
        except ValueError:
            raise ApiError(400, "bad_request", "from_ts/to_ts must be integers")
        return wrap(
            lambda: service.records_view(
                params.get("kind"), params.get("token"), from_ts, to_ts
            )
        )

    @app.get("/assets")
    async def get_assets(request: Request):
        await scoped(request, Scope.READ_ASSETS)
        return service.asset_view()

    @app.get("/knowledge/{token_id}")
    async def get_knowledge(token_id: str, request: Request):
        await scoped(request, Scope.READ_KNOWLEDGE)
        data = wrap(lambda: service.knowledge_bytes(token_id))
        return Response(content=data, media_type="application/octet-stream")

    @app.get("/quiz")
    async def get_quiz(request: Request):
        await scoped(request, Scope.TAKE_QUIZ)
        return service.quiz_view()

    @app.post("/quiz/answers")
    async def post_quiz_answers(request: Request):
        body, raw = await read_json(request)
        shell_id = await scoped(request, Scope.TAKE_QUIZ, raw)
        answers = body.get("answers")
        if not isinstance(answers, dict) or not answers:
            raise ApiError(400, "bad_request", "answers object required")
        return wrap(lambda: service.submit_quiz_answers(answers, shell_id))

    @app.post("/model/salience")
    async def model_salience(request: Request):
        body, raw = await read_json(request)
        await scoped(request, Scope.QUERY_MODEL, raw)
        text = body.get("text")
        if not isinstance(text, str):
            raise ApiError(400, "bad_request", "text required")
        return wrap(lambda: service.salience(text))

    return app


# --- configuration and entry point -----------------------------------------

@dataclass
class NodeConfig:
    listen_host: str
    listen_port: int
    data_dir: Path
    keyfile: Path
    passphrase_env: str
    params: NodeParams
    quiz_file: Optional[Path]
    validators: Optional[ValidatorSet]


def load_config(path: str | Path) -> NodeConfig:
    parser = configparser.ConfigParser()
    parser.optionxform = str
    text = Path(path).read_text()
    parser.read_string(text)
    node = parser["node"] if "node" in parser else {}
    listen = node.get("listen", "127.0.0.1:8545")
    host, _, port = listen.rpartition(":")
    params = NodeParams(
        reward=int(node.get("reward", 10)),
        codify_k=int(node.get("codify_k", 10)),
        refine=RefineParams(
            alpha=float(node.get("refine_alpha", 0.5)),
            half_life_days=float(node.get("refine_half_life_days", 30)),
            burn_threshold=float(node.get("refine_burn_threshold", 0.05)),
        ),
        seal_interval=float(node.get("seal_interval", 2.0)),
        queue_size=int(node.get("queue_size", 10000)),
        store_capacity=int(node.get("store_capacity", 1 << 30)),
    )
    validators = parse_validators_config(text) if "validators" in parser else None
    quiz_file = Path(node["quiz_file"]) if "quiz_file" in node else None
    return NodeConfig(
        listen_host=host or "127.0.0.1",
        listen_port=int(port),
        data_dir=Path(node.get("data_dir", "./cogledger-data")),
        keyfile=Path(node.get("keyfile", "./keyfile.json")),
        passphrase_env=node.get("passphrase_env", "COGLEDGER_PASSPHRASE"),
        params=params,
        quiz_file=quiz_file,
        validators=validators,
    )


def build_service(config: NodeConfig) -> NodeService:
    passphrase = os.environ.get(config.passphrase_env, "")
    keyfile = KeyFile.load(config.keyfile, passphrase)
    vset = config.validators or ValidatorSet.from_pubkeys(
        [(keys.public_bytes(keyfile.validator_key), 1)]
    )
    quiz = (
        load_quiz(config.quiz_file.read_text()) if config.quiz_file else default_quiz()
    )
    return NodeService(config.data_dir, keyfile, vset, quiz, config.params)


def main(argv: Optional[list[str]] = None) -> None:
    import uvicorn

    ap = argparse.ArgumentParser(prog="cogledger-node")
    ap.add_argument("--config", required=True, help="node config file")
    args = ap.parse_args(argv)
    config = load_config(args.config)
    service = build_service(config)
    service.start_sealer()
    uvicorn.run(
        create_app(service), host=config.listen_host, port=config.listen_port
    )


if __name__ == "__main__":
    main()
