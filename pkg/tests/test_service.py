"""HTTP service contract: lifecycle, error bodies, metadata, session
independence, and static frontend mounting."""

import pytest
from fastapi.testclient import TestClient

from nndialog.service import create_app
from nndialog.session import describe_bundle


@pytest.fixture()
def client(trained_world):
    kb, _, bundle = trained_world
    return TestClient(create_app(bundle, kb))


def start_session(client):
    response = client.post("/api/session")
    assert response.status_code == 201
    return response.json()["session_id"]


class TestLifecycle:
    def test_create_message_state_delete(self, client, trained_world):
        _, dialogs, _ = trained_world
        sid = start_session(client)
        user = dialogs[0].turns[0].user
        result = client.post(f"/api/session/{sid}/message", json={"text": user})
        assert result.status_code == 200
        body = result.json()
        assert body["turn"] == 1 and body["user"] == user
        assert isinstance(body["system"], str) and body["system"]
        assert set(body["belief"]) == {"area", "food", "pricerange"}

        state = client.get(f"/api/session/{sid}/state").json()
        assert state["turns"] == 1
        assert state["transcript"][0]["system"] == body["system"]

        assert client.delete(f"/api/session/{sid}").json() == {"ok": True}
        assert client.get(f"/api/session/{sid}/state").status_code == 404

    def test_sessions_via_http_are_independent(self, client, trained_world):
        _, dialogs, _ = trained_world
        user = dialogs[0].turns[0].user
        a, b = start_session(client), start_session(client)
        assert a != b
        reply_a = client.post(f"/api/session/{a}/message", json={"text": user}).json()
        reply_b = client.post(f"/api/session/{b}/message", json={"text": user}).json()
        assert reply_a["system"] == reply_b["system"]
        client.post(f"/api/session/{a}/message", json={"text": "good bye"})
        assert client.get(f"/api/session/{a}/state").json()["turns"] == 2
        assert client.get(f"/api/session/{b}/state").json()["turns"] == 1


class TestErrors:
    def test_unknown_session_is_404_with_error_body(self, client):
        for method, url in (
            ("post", "/api/session/nope/message"),
            ("get", "/api/session/nope/state"),
            ("delete", "/api/session/nope"),
        ):
            kwargs = {"json": {"text": "hi"}} if method == "post" else {}
            response = getattr(client, method)(url, **kwargs)
            assert response.status_code == 404
            assert response.json() == {"error": "unknown session"}

    def test_malformed_body_is_400_with_error_body(self, client):
        sid = start_session(client)
        for payload in ({}, {"text": 7}, {"message": "hi"}):
            response = client.post(f"/api/session/{sid}/message", json=payload)
            assert response.status_code == 400
            assert "error" in response.json()


class TestMeta:
    def test_meta_matches_bundle(self, client, trained_world):
        kb, _, bundle = trained_world
        assert client.get("/api/meta").json() == describe_bundle(bundle, kb)


class TestFrontend:
    def test_static_ui_served_when_directory_given(self, trained_world, tmp_path):
        kb, _, bundle = trained_world
        (tmp_path / "index.html").write_text("<html><body>chat</body></html>")
        client = TestClient(create_app(bundle, kb, frontend_dir=str(tmp_path)))
        response = client.get("/")
        assert response.status_code == 200
        assert "chat" in response.text
        assert client.get("/api/meta").status_code == 200

    def test_no_frontend_mounted_by_default(self, client):
        assert client.get("/").status_code == 404
