import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One verdict line per shipping criterion, in file order."""
    verdicts = {}
    for outcome, label in (("passed", "PASS"), ("failed", "FAIL"),
                           ("error", "FAIL"), ("skipped", "SKIP")):
        for report in terminalreporter.stats.get(outcome, []):
            nodeid = getattr(report, "nodeid", "")
            if not ("test_acceptance.py" in nodeid or "test_frontend.py" in nodeid):
                continue
            if outcome == "passed" and report.when != "call":
                continue
            detail = dict(getattr(report, "user_properties", []) or []).get("acceptance", "")
            if outcome == "skipped" and not detail:
                longrepr = report.longrepr
                reason = longrepr[2] if isinstance(longrepr, tuple) else str(longrepr)
                detail = reason.removeprefix("Skipped: ")
            name = nodeid.split("::")[-1].removeprefix("test_").replace("_", " ")
            lineno = report.location[1] or 0
            if nodeid not in verdicts or label == "FAIL":
                verdicts[nodeid] = (nodeid.split("::")[0], lineno, label, name, detail)
    if not verdicts:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for _, _, label, name, detail in sorted(verdicts.values()):
        line = f"[{label}] {name}"
        if detail:
            line += f": {detail}"
        terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def trained_world(tmp_path_factory):
    """A KB, a small corpus, and a model trained to reproduce it exactly.

    Shared by the session/service tests, which need a model whose replies
    follow the corpus script."""
    from nndialog.corpus import generate_kb, generate_synthetic_corpus
    from nndialog.schema import default_schema
    from nndialog.training import TrainingConfig, train

    schema = default_schema()
    kb = generate_kb(seed=21, n_entities=30, schema=schema)
    dialogs = generate_synthetic_corpus(kb, 12, seed=22, schema=schema)
    tconfig = TrainingConfig(
        epochs=250, batch_size=2, lr=1e-2, clip_norm=5.0, dropout=0.0,
        patience=250, seed=0, dev_fraction=0.0, emb_dim=32, enc_hidden=24,
        dlg_hidden=48, head_hidden=(48,),
    )
    path = tmp_path_factory.mktemp("world") / "model.ckpt"
    bundle, history = train(tconfig, dialogs, kb, schema, path)
    assert history[-1]["joint_goal"] == 1.0, "fixture model failed to overfit"
    assert history[-1]["response"] == 1.0
    return kb, dialogs, bundle
