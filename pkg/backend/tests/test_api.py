"""
Test cases for FastAPI endpoints.
Tests health, scenarios, run lifecycle and tracing status.
"""
import pytest
from fastapi.testclient import TestClient

from backend.app import app

SMALL_RUN = {
    "scenario": "straight",
    "seed": 2,
    "ga": {"pop_size": 8, "generations": 3},
    "sim_overrides": {"n_elements": 20},
}


@pytest.fixture(scope="module")
def client():
    with TestClient(app) as c:
        yield c


class TestHealthEndpoint:
    """Test suite for health check endpoint."""

    def test_health_check(self, client):
        """TC-API-001: Health endpoint should return healthy status."""
        response = client.get("/api/health")
        assert response.status_code == 200
        data = response.json()
        assert data["status"] == "healthy"
        assert data["service"] == "streetlight-sectorization"


class TestScenarioEndpoint:
    """Test suite for the bundled scenario listing."""

    def test_list_scenarios(self, client):
        """TC-API-002: Bundled scenarios are listed with their segment counts."""
        response = client.get("/api/scenarios")
        assert response.status_code == 200
        by_name = {s["name"]: s for s in response.json()}
        assert by_name["plus_crossing"]["n_segments"] == 4
        assert by_name["grid_2x2"]["n_segments"] == 12


class TestRunEndpoints:
    """Test suite for run creation, lookup and deletion."""

    def test_create_run(self, client):
        """TC-API-003: A run completes and stores its scores."""
        response = client.post("/api/runs", json=SMALL_RUN)
        assert response.status_code == 200
        data = response.json()
        assert data["status"] == "completed"
        assert data["n_clusters_true"] == 1
        assert 0.0 <= data["purity"] <= 1.0
        assert data["config"]["ga"]["pop_size"] == 8

    def test_get_and_list_run(self, client):
        """TC-API-004: A stored run can be fetched and appears in the listing."""
        run_id = client.post("/api/runs", json=SMALL_RUN).json()["id"]
        response = client.get(f"/api/runs/{run_id}")
        assert response.status_code == 200
        assert response.json()["id"] == run_id
        assert run_id in [r["id"] for r in client.get("/api/runs").json()]

    def test_delete_run(self, client):
        """TC-API-005: Delete removes the run; a second delete is 404."""
        run_id = client.post("/api/runs", json=SMALL_RUN).json()["id"]
        response = client.delete(f"/api/runs/{run_id}")
        assert response.status_code == 200
        assert response.json()["status"] == "deleted"
        assert client.delete(f"/api/runs/{run_id}").status_code == 404
        assert client.get(f"/api/runs/{run_id}").status_code == 404

    def test_unknown_scenario(self, client):
        """TC-API-006: Unknown scenarios are 404."""
        response = client.post("/api/runs", json={**SMALL_RUN, "scenario": "moon_base"})
        assert response.status_code == 404

    def test_invalid_ga(self, client):
        """TC-API-007: Invalid GA settings are 422."""
        response = client.post("/api/runs", json={**SMALL_RUN, "ga": {"pop_size": 5}})
        assert response.status_code == 422

    def test_failed_run_recorded(self, client):
        """TC-API-008: A run whose simulation settings are invalid is stored as failed."""
        response = client.post("/api/runs", json={**SMALL_RUN, "sim_overrides": {"message_loss_prob": 3}})
        assert response.status_code == 200
        data = response.json()
        assert data["status"] == "failed"
        assert data["error"]


class TestTracingEndpoint:
    """Test suite for tracing status."""

    def test_tracing_disabled_without_key(self, client):
        """TC-API-009: Without an API key tracing reports disabled."""
        data = client.get("/api/tracing-status").json()
        assert data["enabled"] is False
        assert data["api_key_set"] is False
