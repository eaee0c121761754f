import pytest
from fastapi.testclient import TestClient

from scenesim.service import create_app


@pytest.fixture
def client():
    return TestClient(create_app())


@pytest.fixture
def session_id(client):
    resp = client.post("/sessions", json={"seed": 7})
    assert resp.status_code == 200
    body = resp.json()
    assert body["violations"] == []
    return body["id"]


class TestSessionLifecycle:
    def test_create_from_demo_scene(self, client):
        resp = client.post("/sessions", json={})
        assert resp.status_code == 200
        assert "id" in resp.json()

    def test_create_from_scene_document(self, client, scene):
        from scenesim.scene import scene_to_dict
        resp = client.post("/sessions", json={"scene": scene_to_dict(scene)})
        assert resp.status_code == 200

    def test_delete_session(self, client, session_id):
        assert client.delete(f"/sessions/{session_id}").status_code == 200
        assert client.get(f"/sessions/{session_id}/scene").status_code == 404

    def test_unknown_session_404(self, client):
        assert client.get("/sessions/nope/scene").status_code == 404
        assert client.post("/sessions/nope/commands",
                           json={"text": "Delete all"}).status_code == 404


class TestCommands:
    def test_end_to_end_add_then_delete(self, client, session_id):
        resp = client.post(f"/sessions/{session_id}/commands", json={
            "text": "Add a red Porsche in 20 to 30 meters driving ahead"})
        assert resp.status_code == 200
        body = resp.json()
        assert body["vehicles"] == ["veh001"]
        assert "asset_manage" in body["configs_by_role"]
        assert body["violations"] == []

        resp = client.post(f"/sessions/{session_id}/commands", json={
            "text": "Delete all cars in the scene"})
        body = resp.json()
        assert body["vehicles"] == []
        assert body["deleted_ids"] == ["veh001"]

        scene = client.get(f"/sessions/{session_id}/scene").json()
        assert scene["vehicles"] == []
        assert len(scene["history"]) >= 2

    def test_parse_error_is_422_with_hint(self, client, session_id):
        resp = client.post(f"/sessions/{session_id}/commands", json={
            "text": "Teleport the car to Mars"})
        assert resp.status_code == 422
        detail = resp.json()["detail"]
        assert detail["kind"] == "ParseError"
        assert detail["clause"]
        assert detail["rule_hint"]

    def test_infeasible_plan_is_422_and_state_untouched(self, client, session_id):
        before = client.get(f"/sessions/{session_id}/scene").json()
        resp = client.post(f"/sessions/{session_id}/commands", json={
            "text": "Add a car behind the added bus"})
        assert resp.status_code == 422
        after = client.get(f"/sessions/{session_id}/scene").json()
        assert after == before

    def test_concurrent_command_is_409(self, client, session_id):
        # emulate an in-flight command by holding the session's writer lock
        handle = client.app.state.sessions[session_id]
        handle.lock.acquire()
        try:
            resp = client.post(f"/sessions/{session_id}/commands", json={
                "text": "The view moves 1 meters ahead"})
            assert resp.status_code == 409
        finally:
            handle.lock.release()
        # and the session still works once the first command finishes
        resp = client.post(f"/sessions/{session_id}/commands", json={
            "text": "The view moves 1 meters ahead"})
        assert resp.status_code == 200


class TestFrames:
    def test_rendered_frames_served_as_png(self, client):
        resp = client.post("/sessions", json={
            "seed": 1,
            "render_options": {"width": 48, "height": 36, "frames": 2}})
        sid = resp.json()["id"]
        body = client.post(f"/sessions/{sid}/commands", json={
            "text": "Add a red Porsche in 20 to 30 meters driving ahead",
            "render": True}).json()
        assert body["frame_count"] == 2
        png = client.get(body["frames"][0])
        assert png.status_code == 200
        assert png.headers["content-type"] == "image/png"
        assert png.content[:8] == b"\x89PNG\r\n\x1a\n"

    def test_missing_frame_404(self, client, session_id):
        resp = client.get(f"/sessions/{session_id}/frames/0")
        assert resp.status_code == 404


class TestExportEndpoint:
    def test_export_reflects_scene(self, client, session_id):
        client.post(f"/sessions/{session_id}/commands", json={
            "text": "Add a red Porsche in 20 to 30 meters driving ahead"})
        doc = client.get(f"/sessions/{session_id}/export").json()
        assert doc["version"] == 1
        assert len(doc["assets"]) == 1
        assert doc["assets"][0]["asset_id"] == "car_porsche_911"
