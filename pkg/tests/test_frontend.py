"""Web client against a live service: builds the frontend, serves a trained
checkpoint, and drives the page through the scripted browser test.

Everything here skips cleanly when npm or the frontend dependencies are
missing; the rest of the suite never needs the UI."""

import os
import shutil
import socket
import subprocess
import sys
import time

import pytest

FRONTEND_DIR = os.path.join(os.path.dirname(__file__), os.pardir, "frontend")

pytestmark = pytest.mark.skipif(
    shutil.which("npm") is None
    or not os.path.isdir(os.path.join(FRONTEND_DIR, "node_modules")),
    reason="frontend toolchain not available (npm install in frontend/)",
)


def _free_port():
    with socket.socket() as sock:
        sock.bind(("127.0.0.1", 0))
        return sock.getsockname()[1]


@pytest.fixture(scope="module")
def served_frontend(tmp_path_factory):
    """Builds dist/, trains a small model that handles the scripted phrase,
    and serves both over HTTP; yields the base URL."""
    import httpx

    from nndialog.corpus import generate_kb, generate_synthetic_corpus, serialize_corpus
    from nndialog.kb import save_kb
    from nndialog.schema import default_schema
    from nndialog.training import TrainingConfig, train

    build = subprocess.run(
        ["npm", "run", "build"], cwd=FRONTEND_DIR, capture_output=True, text=True
    )
    assert build.returncode == 0, build.stdout + build.stderr

    workdir = tmp_path_factory.mktemp("served")
    schema = default_schema()
    kb = generate_kb(seed=61, n_entities=40, schema=schema)
    dialogs = generate_synthetic_corpus(kb, 600, seed=62, schema=schema)
    tconfig = TrainingConfig(
        epochs=35, batch_size=16, lr=1e-2, clip_norm=5.0, dropout=0.0,
        patience=35, seed=0, dev_fraction=0.1,
        emb_dim=48, enc_hidden=32, dlg_hidden=64, head_hidden=(48,),
    )
    model_path = workdir / "model.ckpt"
    kb_path = workdir / "kb.json"
    train(tconfig, dialogs, kb, schema, str(model_path))
    save_kb(str(kb_path), kb)
    serialize_corpus(str(workdir / "corpus.jsonl"), dialogs)

    port = _free_port()
    proc = subprocess.Popen(
        [
            sys.executable, "-m", "nndialog.cli", "serve",
            "--model", str(model_path), "--kb", str(kb_path),
            "--host", "127.0.0.1", "--port", str(port),
            "--frontend", os.path.join(FRONTEND_DIR, "dist"),
        ],
        stdout=subprocess.PIPE,
        stderr=subprocess.STDOUT,
        text=True,
    )
    base = f"http://127.0.0.1:{port}"
    try:
        deadline = time.time() + 60
        while True:
            try:
                if httpx.get(f"{base}/api/meta", timeout=2).status_code == 200:
                    break
            except httpx.HTTPError:
                pass
            if proc.poll() is not None or time.time() > deadline:
                out = proc.stdout.read() if proc.stdout else ""
                raise RuntimeError(f"service failed to start:\n{out}")
            time.sleep(0.3)
        yield base
    finally:
        proc.terminate()
        proc.wait(timeout=10)


def test_static_page_served(served_frontend):
    import httpx

    page = httpx.get(f"{served_frontend}/")
    assert page.status_code == 200
    assert "<title>nndialog</title>" in page.text
    for asset in ("/style.css", "/app/main.js"):
        assert httpx.get(f"{served_frontend}{asset}").status_code == 200


def test_scripted_browser_run(served_frontend, record_property):
    env = dict(os.environ, NNDIALOG_SERVICE_URL=served_frontend)
    result = subprocess.run(
        ["npx", "vitest", "run", "tests/live.test.ts"],
        cwd=FRONTEND_DIR,
        env=env,
        capture_output=True,
        text=True,
        timeout=300,
    )
    assert result.returncode == 0, result.stdout + result.stderr
    record_property(
        "acceptance",
        "browser script: session created, 'cheap italian in the south' sent; belief bars "
        "show italian/south/cheap, api_call badge set, entity list matches /state",
    )
