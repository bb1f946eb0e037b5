"""Owner wallet CLI: key management, asset inspection, history import,
grant control, and learning-pass triggers against a running node.

The CLI only ever speaks HTTP to the node; it never touches the data
directory, so there is exactly one mutation path. Exit codes: 0 success,
1 usage error, 2 node/network error, 3 authorization error.
"""

from __future__ import annotations

import getpass
import json
import os
import sys
from pathlib import Path
from typing import Optional

import click
import httpx

from . import keys
from .encoding import ContentAddress
from .errors import BadHeader
from .keys import KeyFile, KeyFileError
from .learning import decode_payload
from .memory import import_history_csv
from .node import WALLET_SHELL_ID, owner_request_message
from .store import content_address_of

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NODE = 2
EXIT_AUTH = 3

PASSPHRASE_ENV = "COGLEDGER_PASSPHRASE"


class NodeError(Exception):
    pass


class AuthError(Exception):
    pass


class WalletContext:
    def __init__(self, node_url: str, keyfile_path: Path, as_json: bool):
        self.node_url = node_url.rstrip("/")
        self.keyfile_path = keyfile_path
        self.as_json = as_json
        self._keyfile: Optional[KeyFile] = None

    def keyfile(self) -> KeyFile:
        if self._keyfile is None:
            if not self.keyfile_path.exists():
                raise NodeError(f"key file not found: {self.keyfile_path} (run keygen)")
            passphrase = os.environ.get(PASSPHRASE_ENV)
            if passphrase is None:
                passphrase = getpass.getpass("passphrase: ")
            try:
                self._keyfile = KeyFile.load(self.keyfile_path, passphrase)
            except KeyFileError as exc:
                raise AuthError(str(exc))
        return self._keyfile

    def request(self, method: str, path: str, body: Optional[dict] = None,
                signed: bool = False, raw_response: bool = False):
        payload = b"" if body is None else json.dumps(body).encode("utf-8")
        headers = {}
        if payload:
            headers["content-type"] = "application/json"
        if signed:
            kf = self.keyfile()
            message = owner_request_message(method, path, payload)
            headers["x-owner-pubkey"] = keys.public_bytes(kf.account_key).hex()
            headers["x-owner-signature"] = keys.sign(kf.account_key, message).hex()
        try:
            resp = httpx.request(
                method, self.node_url + path, content=payload or None,
                headers=headers, timeout=30,
            )
        except httpx.HTTPError as exc:
            raise NodeError(f"cannot reach node at {self.node_url}: {exc}")
        if resp.status_code in (401, 403):
            raise AuthError(_error_text(resp))
        if resp.status_code >= 400:
            raise NodeError(_error_text(resp))
        return resp if raw_response else resp.json()


def _error_text(resp: httpx.Response) -> str:
    try:
        blob = resp.json()
        return f"{resp.status_code} {blob.get('code', '')}: {blob.get('message', '')}"
    except ValueError:
        return f"{resp.status_code}: {resp.text[:200]}"


def emit(ctx: WalletContext, data, plain: str) -> None:
    if ctx.as_json:
        click.echo(json.dumps(data, indent=2, sort_keys=True))
    else:
        click.echo(plain)


@click.group()
@click.option("--node", default="http://127.0.0.1:8545", envvar="COGLEDGER_NODE",
              show_default=True, help="node base URL")
@click.option("--keyfile", default="keyfile.json", envvar="COGLEDGER_KEYFILE",
              show_default=True, type=click.Path(path_type=Path))
@click.option("--json", "as_json", is_flag=True, help="machine-readable output")
@click.pass_context
def cli(ctx, node: str, keyfile: Path, as_json: bool):
    ctx.obj = WalletContext(node, keyfile, as_json)


@cli.command()
@click.pass_obj
def keygen(ctx: WalletContext):
    """Create the encrypted key file (account + validator keypairs)."""
    if ctx.keyfile_path.exists():
        raise click.UsageError(f"refusing to overwrite {ctx.keyfile_path}")
    passphrase = os.environ.get(PASSPHRASE_ENV)
    if passphrase is None:
        passphrase = getpass.getpass("new passphrase: ")
        again = getpass.getpass("repeat passphrase: ")
        if passphrase != again:
            raise click.UsageError("passphrases do not match")
    kf = KeyFile.create(ctx.keyfile_path, passphrase)
    emit(
        ctx,
        {
            "keyfile": str(ctx.keyfile_path),
            "account_id": kf.account_id.hex(),
            "validator_id": kf.validator_id.hex(),
            "validator_pubkey": keys.public_bytes(kf.validator_key).hex(),
        },
        f"wrote {ctx.keyfile_path}\n"
        f"account:   {kf.account_id.hex()}\n"
        f"validator: {kf.validator_id.hex()}\n"
        f"validator pubkey (for [validators] config): "
        f"{keys.public_bytes(kf.validator_key).hex()}",
    )


@cli.command()
@click.pass_obj
def assets(ctx: WalletContext):
    """Show the wallet view: COG balance and NFTs grouped by class."""
    view = ctx.request("GET", "/assets", signed=True)
    lines = [f"Account: {view['account']}", f"COG: {view['balance']}"]
    lines.append("Badges:")
    for item in view["badges"]:
        lines.append(f"  {item['token_id']}  {item['trait_code']}")
    lines.append("Knowledge objects:")
    for item in view["knowledge"]:
        lines.append(
            f"  {item['token_id']}  weight={item['weight']:.6f}  "
            f"bytes={item['content_len']}"
        )
    lines.append("Models:")
    for item in view["models"]:
        lines.append(f"  {item['token_id']}  bytes={item['content_len']}")
    emit(ctx, view, "\n".join(lines))


@cli.group()
def knowledge():
    """Inspect knowledge objects."""


@knowledge.command("show")
@click.argument("token_id")
@click.pass_obj
def knowledge_show(ctx: WalletContext, token_id: str):
    """Fetch, verify, and pretty-print one knowledge object."""
    data = _fetch_verified(ctx, token_id)
    payload = decode_payload(data)
    lines = [
        f"Token: {token_id}",
        f"Window: {payload.window[0]}..{payload.window[1]}",
        f"Sources: {len(payload.source_record_ids)} records",
        "Vocabulary:",
    ]
    for term, score_micro in payload.vocabulary:
        lines.append(f"  {term:<24} {score_micro / 1e6:.6f}")
    if payload.mentions:
        lines.append("Mentions:")
        for mention in payload.mentions:
            lines.append(f"  {mention}")
    emit(
        ctx,
        {
            "token_id": token_id,
            "window": list(payload.window),
            "vocabulary": [[t, m / 1e6] for t, m in payload.vocabulary],
            "mentions": list(payload.mentions),
            "sources": [s.hex() for s in payload.source_record_ids],
        },
        "\n".join(lines),
    )


@cli.command("import")
@click.argument("csv_path", type=click.Path(exists=True, path_type=Path))
@click.pass_obj
def import_csv(ctx: WalletContext, csv_path: Path):
    """Import a browser-history CSV (url,title,visited_at,dwell_seconds)."""
    kf = ctx.keyfile()
    try:
        records, row_errors = import_history_csv(
            csv_path.read_bytes(), kf.account_id, WALLET_SHELL_ID
        )
    except BadHeader as exc:
        raise click.UsageError(f"bad CSV: {exc}")
    submitted, duplicates = 0, 0
    for rec in records:
        body = {"kind": "PageVisit", "url": rec.url, "captured_at": rec.captured_at}
        if rec.title is not None:
            body["title"] = rec.title
        if rec.dwell_seconds is not None:
            body["dwell_seconds"] = rec.dwell_seconds
        try:
            ctx.request("POST", "/activities", body, signed=True)
            submitted += 1
        except NodeError as exc:
            if "409" in str(exc):
                duplicates += 1
            else:
                raise
    ctx.request("POST", "/admin/seal", {}, signed=True)
    for row, reason in row_errors:
        click.echo(f"row {row}: {reason}", err=True)
    emit(
        ctx,
        {"submitted": submitted, "duplicates": duplicates,
         "row_errors": [[r, m] for r, m in row_errors]},
        f"imported {submitted} visits"
        + (f", {duplicates} duplicates skipped" if duplicates else "")
        + (f", {len(row_errors)} bad rows" if row_errors else ""),
    )


@cli.command()
@click.pass_obj
def quiz(ctx: WalletContext):
    """Take the personality quiz interactively and mint the badge."""
    definition = ctx.request("GET", "/quiz", signed=True)
    answers = {}
    click.echo("answer each question from -2 (disagree) to 2 (agree)")
    for q in definition["questions"]:
        while True:
            raw = click.prompt(q["text"], default="0")
            try:
                value = int(raw)
            except ValueError:
                click.echo("  enter an integer in [-2, 2]", err=True)
                continue
            if -2 <= value <= 2:
                answers[q["question_id"]] = value
                break
            click.echo("  enter an integer in [-2, 2]", err=True)
    result = ctx.request("POST", "/quiz/answers", {"answers": answers}, signed=True)
    ctx.request("POST", "/admin/seal", {}, signed=True)
    badge = result.get("badge")
    emit(
        ctx,
        result,
        f"badge minted: {badge['trait_code']} ({badge['token_id']})"
        if badge
        else f"recorded {len(result['recorded'])} answers (quiz incomplete, no badge)",
    )


@cli.group()
def grants():
    """Manage shell capability grants."""


@grants.command("list")
@click.pass_obj
def grants_list(ctx: WalletContext):
    view = ctx.request("GET", "/grants/pending", signed=True)
    lines = []
    for g in view["grants"]:
        lines.append(
            f"{g['grant_id']}  {g['display_name']}  "
            f"scopes={','.join(g['scopes'])}  autonomy={g['autonomy_level']}"
        )
    emit(ctx, view, "\n".join(lines) if lines else "no pending grants")


@grants.command("approve")
@click.argument("grant_id")
@click.pass_obj
def grants_approve(ctx: WalletContext, grant_id: str):
    out = ctx.request("POST", f"/grants/{grant_id}/approve", {}, signed=True)
    ctx.request("POST", "/admin/seal", {}, signed=True)
    emit(
        ctx,
        out,
        f"approved {grant_id}\n"
        f"secret (shown once, give it to the shell): {out['secret']}",
    )


@grants.command("revoke")
@click.argument("grant_id")
@click.pass_obj
def grants_revoke(ctx: WalletContext, grant_id: str):
    out = ctx.request("POST", f"/grants/{grant_id}/revoke", {}, signed=True)
    ctx.request("POST", "/admin/seal", {}, signed=True)
    emit(ctx, out, f"revoked {grant_id}")


@cli.command()
@click.option("--k", type=int, default=None, help="vocabulary size")
@click.pass_obj
def codify(ctx: WalletContext, k: Optional[int]):
    """Run a codification pass over the memory pool."""
    body = {} if k is None else {"k": k}
    out = ctx.request("POST", "/admin/codify", body, signed=True)
    ctx.request("POST", "/admin/seal", {}, signed=True)
    emit(
        ctx,
        out,
        f"knowledge object {out['token_id']}\n"
        f"terms={out['terms']} mentions={out['mentions']} "
        f"sources={out['sources']} reward={out['reward']} COG",
    )


@cli.command()
@click.pass_obj
def refine(ctx: WalletContext):
    """Run a refinery pass: reweight knowledge, burn what fell below."""
    out = ctx.request("POST", "/admin/refine", {}, signed=True)
    ctx.request("POST", "/admin/seal", {}, signed=True)
    emit(
        ctx,
        out,
        f"refined {out['inputs']} objects: "
        f"{out['updates']} reweighted, {out['burns']} burned",
    )


@cli.command()
@click.pass_obj
def train(ctx: WalletContext):
    """Train the preference model from current knowledge objects."""
    out = ctx.request("POST", "/admin/train", {}, signed=True)
    ctx.request("POST", "/admin/seal", {}, signed=True)
    emit(ctx, out, f"model {out['token_id']} ({out['terms']} terms)")


@cli.command()
@click.argument("token_id")
@click.pass_obj
def burn(ctx: WalletContext, token_id: str):
    """Burn an NFT (tombstones it; the record stays on-chain)."""
    out = ctx.request("POST", f"/tokens/{token_id}/burn", {}, signed=True)
    ctx.request("POST", "/admin/seal", {}, signed=True)
    emit(ctx, out, f"burned {token_id}")


@cli.command()
@click.argument("token_id")
@click.argument("path", type=click.Path(path_type=Path))
@click.pass_obj
def export(ctx: WalletContext, token_id: str, path: Path):
    """Export a token's payload bytes after verifying the content hash."""
    data = _fetch_verified(ctx, token_id)
    path.write_bytes(data)
    emit(
        ctx,
        {"token_id": token_id, "path": str(path), "bytes": len(data)},
        f"wrote {len(data)} verified bytes to {path}",
    )


def _fetch_verified(ctx: WalletContext, token_id: str) -> bytes:
    """Download payload bytes and check them against the on-chain address."""
    view = ctx.request("GET", "/assets", signed=True)
    meta = None
    for group in ("badges", "knowledge", "models"):
        for item in view[group]:
            if item["token_id"] == token_id:
                meta = item
    if meta is None:
        raise NodeError(f"token {token_id} not found in wallet")
    resp = ctx.request("GET", f"/knowledge/{token_id}", signed=True, raw_response=True)
    data = resp.content
    expected = ContentAddress(bytes.fromhex(meta["content_root"]), meta["content_len"])
    if content_address_of(data) != expected:
        raise NodeError(f"content integrity check failed for {token_id}")
    return data


def main(argv: Optional[list[str]] = None) -> int:
    try:
        cli.main(args=argv, standalone_mode=False)
        return EXIT_OK
    except click.UsageError as exc:
        click.echo(f"usage error: {exc.format_message()}", err=True)
        return EXIT_USAGE
    except click.ClickException as exc:
        exc.show()
        return EXIT_USAGE
    except click.exceptions.Abort:
        click.echo("aborted", err=True)
        return EXIT_USAGE
    except AuthError as exc:
        click.echo(f"authorization error: {exc}", err=True)
        return EXIT_AUTH
    except NodeError as exc:
        click.echo(f"node error: {exc}", err=True)
        return EXIT_NODE


if __name__ == "__main__":
    sys.exit(main())
