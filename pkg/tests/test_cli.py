"""Wallet CLI against a live node: exit codes, output shape, integrity
checks, and the interactive quiz loop."""

import json

import pytest

from cogledger.cli import main
from cogledger.keys import KeyFile

PASS = "test-passphrase"


@pytest.fixture
def keyfile_path(tmp_path, keyfile, monkeypatch):
    path = tmp_path / "wallet-keys.json"
    keyfile.save(path, PASS)
    monkeypatch.setenv("COGLEDGER_PASSPHRASE", PASS)
    return path


def run_cli(args, keyfile_path, node_url, capsys):
    code = main(["--node", node_url, "--keyfile", str(keyfile_path)] + args)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_keygen_creates_encrypted_file(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("COGLEDGER_PASSPHRASE", PASS)
    path = tmp_path / "new-keys.json"
    code = main(["--keyfile", str(path), "keygen"])
    out = capsys.readouterr().out
    assert code == 0
    assert path.exists()
    assert "account:" in out
    loaded = KeyFile.load(path, PASS)
    assert loaded.account_id.hex() in out
    # refuses to overwrite
    assert main(["--keyfile", str(path), "keygen"]) == 1


def test_assets_on_fresh_node(live_node, keyfile_path, capsys):
    url, _svc = live_node
    code, out, err = run_cli(["assets"], keyfile_path, url, capsys)
    assert code == 0
    assert "COG: 0" in out
    assert "Badges:" in out and "Knowledge objects:" in out and "Models:" in out


def test_assets_json_flag(live_node, keyfile_path, capsys):
    url, _svc = live_node
    code = main(["--node", url, "--keyfile", str(keyfile_path), "--json", "assets"])
    out = capsys.readouterr().out
    assert code == 0
    parsed = json.loads(out)
    assert parsed["balance"] == 0


def test_node_unreachable_is_exit_2(keyfile_path, capsys):
    code, _out, err = run_cli(["assets"], keyfile_path, "http://127.0.0.1:9", capsys)
    assert code == 2
    assert "node error" in err


def test_wrong_passphrase_is_exit_3(live_node, tmp_path, keyfile, monkeypatch, capsys):
    url, _svc = live_node
    path = tmp_path / "keys2.json"
    keyfile.save(path, PASS)
    monkeypatch.setenv("COGLEDGER_PASSPHRASE", "wrong")
    code = main(["--node", url, "--keyfile", str(path), "assets"])
    err = capsys.readouterr().err
    assert code == 3
    assert "authorization error" in err


def test_usage_error_is_exit_1(keyfile_path, capsys):
    assert main(["--keyfile", str(keyfile_path), "no-such-command"]) == 1


def test_import_codify_assets_flow(live_node, keyfile_path, tmp_path, capsys):
    url, _svc = live_node
    csv = tmp_path / "history.csv"
    rows = ["url,title,visited_at,dwell_seconds"]
    rows += [
        f"https://rust.example/{i},rust article {i},{1000 + i},{10 * i}"
        for i in range(5)
    ]
    rows.append("https://bad.example/x,broken,not-a-time,5")
    csv.write_text("\n".join(rows) + "\n")

    code, out, err = run_cli(["import", str(csv)], keyfile_path, url, capsys)
    assert code == 0
    assert "imported 5 visits" in out
    assert "row 6" in err

    code, out, _ = run_cli(["codify"], keyfile_path, url, capsys)
    assert code == 0
    assert "reward=10 COG" in out

    code, out, _ = run_cli(["assets"], keyfile_path, url, capsys)
    assert code == 0
    assert "COG: 10" in out
    assert "weight=1.000000" in out


def test_knowledge_show_and_export(live_node, keyfile_path, tmp_path, capsys):
    url, svc = live_node
    csv = tmp_path / "h.csv"
    csv.write_text(
        "url,title,visited_at,dwell_seconds\n"
        "https://a.example/1,quantum ledger design,100,5\n"
        "https://a.example/2,quantum entanglement news,200,6\n"
    )
    assert run_cli(["import", str(csv)], keyfile_path, url, capsys)[0] == 0
    assert run_cli(["codify"], keyfile_path, url, capsys)[0] == 0

    code = main(["--node", url, "--keyfile", str(keyfile_path), "--json", "assets"])
    view = json.loads(capsys.readouterr().out)
    token = view["knowledge"][0]["token_id"]

    code, out, _ = run_cli(["knowledge", "show", token], keyfile_path, url, capsys)
    assert code == 0
    assert "quantum" in out

    target = tmp_path / "payload.bin"
    code, out, _ = run_cli(["export", token, str(target)], keyfile_path, url, capsys)
    assert code == 0
    assert target.exists() and target.stat().st_size > 0

    code, _, err = run_cli(["export", "ff" * 32, str(tmp_path / "no.bin")],
                           keyfile_path, url, capsys)
    assert code == 2
    assert not (tmp_path / "no.bin").exists()


def test_export_detects_tampered_store(live_node, keyfile_path, tmp_path, capsys):
    url, svc = live_node
    csv = tmp_path / "h.csv"
    csv.write_text(
        "url,title,visited_at,dwell_seconds\n"
        "https://a.example/1,tamper target article,100,5\n"
    )
    run_cli(["import", str(csv)], keyfile_path, url, capsys)
    run_cli(["codify"], keyfile_path, url, capsys)
    main(["--node", url, "--keyfile", str(keyfile_path), "--json", "assets"])
    view = json.loads(capsys.readouterr().out)
    token = view["knowledge"][0]["token_id"]

    # corrupt every stored chunk on disk, then try to export
    for f in (svc.data_dir / "store" / "chunks").rglob("*"):
        if f.is_file():
            raw = bytearray(f.read_bytes())
            if raw:
                raw[0] ^= 0xFF
                f.write_bytes(bytes(raw))
    target = tmp_path / "tampered.bin"
    code, _, err = run_cli(["export", token, str(target)], keyfile_path, url, capsys)
    assert code == 2
    assert not target.exists()


def test_grants_flow(live_node, keyfile_path, capsys):
    url, _svc = live_node
    import httpx

    r = httpx.post(
        f"{url}/shells/register",
        json={"display_name": "cli test shell", "requested_scopes": ["read_assets"]},
    )
    grant_id = r.json()["grant_id"]

    code, out, _ = run_cli(["grants", "list"], keyfile_path, url, capsys)
    assert code == 0 and grant_id in out

    code, out, _ = run_cli(["grants", "approve", grant_id], keyfile_path, url, capsys)
    assert code == 0
    assert "shown once" in out
    secret = out.strip().splitlines()[-1].split(": ")[-1]
    assert len(bytes.fromhex(secret)) == 32

    code, out, _ = run_cli(["grants", "list"], keyfile_path, url, capsys)
    assert "no pending grants" in out

    code, out, _ = run_cli(["grants", "revoke", grant_id], keyfile_path, url, capsys)
    assert code == 0
    r = httpx.get(f"{url}/assets", headers={"authorization": f"Bearer {secret}"})
    assert r.status_code == 403


def test_quiz_interactive(live_node, keyfile_path, monkeypatch, capsys):
    url, _svc = live_node
    from click.testing import CliRunner
    from cogledger.cli import cli

    runner = CliRunner()
    answers = "\n".join(["0"] * 8) + "\n"
    result = runner.invoke(
        cli,
        ["--node", url, "--keyfile", str(keyfile_path), "quiz"],
        input=answers,
        env={"COGLEDGER_PASSPHRASE": PASS},
    )
    assert result.exit_code == 0, result.output
    assert "ESTJ" in result.output


def test_burn_via_cli(live_node, keyfile_path, tmp_path, capsys):
    url, _svc = live_node
    csv = tmp_path / "h.csv"
    csv.write_text(
        "url,title,visited_at,dwell_seconds\n"
        "https://a.example/1,burnable subject matter,100,5\n"
    )
    run_cli(["import", str(csv)], keyfile_path, url, capsys)
    run_cli(["codify"], keyfile_path, url, capsys)
    main(["--node", url, "--keyfile", str(keyfile_path), "--json", "assets"])
    token = json.loads(capsys.readouterr().out)["knowledge"][0]["token_id"]

    code, out, _ = run_cli(["burn", token], keyfile_path, url, capsys)
    assert code == 0
    main(["--node", url, "--keyfile", str(keyfile_path), "--json", "assets"])
    view = json.loads(capsys.readouterr().out)
    assert view["knowledge"] == []


def test_listing_output_is_deterministic(live_node, keyfile_path, tmp_path, capsys):
    url, _svc = live_node
    csv = tmp_path / "h.csv"
    csv.write_text(
        "url,title,visited_at,dwell_seconds\n"
        + "".join(f"https://d.example/{i},determinism check {i},{i},1\n" for i in range(3))
    )
    run_cli(["import", str(csv)], keyfile_path, url, capsys)
    run_cli(["codify"], keyfile_path, url, capsys)
    _, out1, _ = run_cli(["assets"], keyfile_path, url, capsys)
    _, out2, _ = run_cli(["assets"], keyfile_path, url, capsys)
    assert out1 == out2
