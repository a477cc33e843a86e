import pytest
from fastapi.testclient import TestClient

from gkatcheck import service
from gkatcheck.service import app

from conftest import read_fixture


@pytest.fixture
def client():
    with TestClient(app) as c:
        yield c


def test_health(client):
    resp = client.get("/health")
    assert resp.status_code == 200
    assert resp.json() == {"status": "ok"}


def test_check_equivalent_pair(client):
    resp = client.post("/check", json={
        "left": read_fixture("structured_loop.cfg"),
        "right": read_fixture("goto_flow.cfg"),
        "stats": True,
    })
    assert resp.status_code == 200
    body = resp.json()
    assert body["verdict"] == "equivalent"
    assert body["exit_code"] == 0
    assert body["report"] == "EQUIVALENT\n" + "states={states} solver_queries={q} dead_checks={d}".format(
        states=body["stats"]["states"], q=body["stats"]["solver_queries"],
        d=body["stats"]["dead_checks"])
    assert body["witness"] is None


def test_check_inequivalent_with_witness(client):
    resp = client.post("/check", json={
        "left": read_fixture("structured_loop.cfg"),
        "right": read_fixture("goto_flow_bad_guard.cfg"),
        "witness": True,
    })
    body = resp.json()
    assert body["verdict"] == "inequivalent"
    assert body["exit_code"] == 1
    assert body["witness"]["condition"] == "eps-mismatch"
    assert body["witness"]["steps"] == []
    assert body["witness"]["tail_atom"] == "t1&!t2"


def test_check_modes_and_solvers(client):
    for solver in ("sat", "bdd"):
        for mode, verdict in (("trace", "equivalent"), ("bisim", "inequivalent")):
            resp = client.post("/check", json={
                "left": read_fixture("while_p.cfg"),
                "right": read_fixture("while_q.cfg"),
                "mode": mode,
                "solver": solver,
            })
            assert resp.json()["verdict"] == verdict


def test_check_with_init_override(client):
    src = read_fixture("loop_indicators.cfg")
    resp = client.post("/check", json={
        "left": src, "right": src, "init": {"x": 2},
    })
    assert resp.json()["verdict"] == "equivalent"


def test_check_dump(client):
    resp = client.post("/check", json={
        "left": read_fixture("structured_loop.cfg"),
        "right": read_fixture("structured_loop.cfg"),
        "dump_automaton": True,
    })
    dump = resp.json()["dump"]
    assert dump.startswith("# left\nstate 0 | eps: ")
    assert "# right" in dump


def test_parse_endpoint(client):
    resp = client.post("/parse", json={"source": read_fixture("goto_flow.cfg")})
    assert resp.json() == {"ok": True, "errors": []}
    resp = client.post("/parse", json={"source": "break;"})
    body = resp.json()
    assert not body["ok"]
    assert any("condition (3)" in e for e in body["errors"])
    resp = client.post("/parse", json={"source": "if (x { p; }"})
    assert not resp.json()["ok"]


def test_parse_error_maps_to_422(client):
    resp = client.post("/check", json={"left": "if (", "right": "p;"})
    assert resp.status_code == 422
    detail = resp.json()["detail"]
    assert detail["exit_code"] == 2
    assert detail["errors"]


def test_gkat_lane_rejects_control_flow(client):
    resp = client.post("/check", json={
        "left": "x := 1; return;", "right": "return;", "lang": "gkat",
    })
    assert resp.status_code == 422


def test_bad_payload_is_422(client):
    resp = client.post("/check", json={"left": "p;"})
    assert resp.status_code == 422
    resp = client.post("/check", json={"left": "p;", "right": "p;",
                                       "solver": "cvc5"})
    assert resp.status_code == 422


def test_internal_error_maps_to_500(client, monkeypatch):
    from gkatcheck.solvers import InternalError

    def boom(*args, **kwargs):
        raise InternalError("induced failure")

    monkeypatch.setattr(service, "check_sources", boom)
    resp = client.post("/check", json={"left": "p;", "right": "p;"})
    assert resp.status_code == 500
    assert resp.json()["detail"]["exit_code"] == 3
