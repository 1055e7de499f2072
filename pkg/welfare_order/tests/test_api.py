"""
Tests for the regimes, order and bounds endpoints
"""
import numpy as np
from fastapi.testclient import TestClient

from welfare_order.main import app
from welfare_order.utils.dataset import distribution_from_q

client = TestClient(app)

# Compliers with Y = D: y=0,d=0 under z=0 and y=1,d=1 under z=1
COMPLIER_REQUEST = {
    "horizon": 1,
    "probabilities": [[1.0, 0.0, 0.0, 0.0], [0.0, 0.0, 0.0, 1.0]],
}
REFUTED_REQUEST = {
    "horizon": 1,
    "probabilities": [[1.0, 0.0, 0.0, 0.0], [0.0, 0.0, 1.0, 0.0]],
}


def test_list_regimes():
    """test_list_regimes
    Two periods have eight regimes, four of them static
    """
    response = client.get("/regimes", params={"horizon": 2})
    assert response.status_code == 200
    regimes = response.json()
    assert len(regimes) == 8
    assert [regime["index"] for regime in regimes if regime["static"]] == [1, 2, 7, 8]
    assert regimes[5]["label"] == "Regime 6: (1,0,1)"


def test_list_regimes_invalid_horizon():
    """test_list_regimes_invalid_horizon
    T=0 and horizons with too many regimes are rejected
    """
    assert client.get("/regimes", params={"horizon": 0}).status_code == 422
    response = client.get("/regimes", params={"horizon": 4})
    assert response.status_code == 422
    assert response.json()["detail"]["error"] == "DimensionError"


def test_order():
    """test_order
    Treat-all is the only maximal regime for complier data
    """
    response = client.post("/order", json=COMPLIER_REQUEST)
    assert response.status_code == 200
    report = response.json()
    assert report["identified_set"] == [2]
    assert report["edges"] == [[2, 1]]
    assert report["observed_welfare"] == 0.5


def test_order_invalid_assumptions():
    """test_order_invalid_assumptions
    Unknown assumptions are invalid input
    """
    response = client.post("/order", json={**COMPLIER_REQUEST, "assumptions": ["X9"]})
    assert response.status_code == 422
    assert response.json()["detail"]["error"] == "InvalidInputError"


def test_order_wrong_shape():
    """test_order_wrong_shape
    Probabilities must have one block per instrument value
    """
    response = client.post(
        "/order", json={"horizon": 1, "probabilities": [[1.0, 0.0, 0.0, 0.0]]}
    )
    assert response.status_code == 422


def test_order_refuted():
    """test_order_refuted
    A refuted model is a conflict unless projection is requested
    """
    response = client.post("/order", json=REFUTED_REQUEST)
    assert response.status_code == 409
    assert response.json()["detail"]["error"] == "ModelRefutedError"
    response = client.post("/order", json={**REFUTED_REQUEST, "project": True})
    assert response.status_code == 200
    assert response.json()["projected"]


def test_bounds():
    """test_bounds
    Bounds of one regime with regret relative to observed behavior
    """
    response = client.post("/bounds", json={**COMPLIER_REQUEST, "regimes": [2]})
    assert response.status_code == 200
    body = response.json()
    assert body["observed_welfare"] == 0.5
    assert len(body["bounds"]) == 1
    assert abs(body["bounds"][0]["lower"] - 1.0) < 1e-8
    assert abs(body["bounds"][0]["regret_upper"] - 0.5) < 1e-8


def test_markov_layout_by_default(layout_t2):
    """test_markov_layout_by_default
    Two-period bodies use the Markov layout unless it is switched off
    """
    q = np.full(layout_t2.d_q, 1.0 / layout_t2.d_q)
    body = {
        "horizon": 2,
        "probabilities": distribution_from_q(q, layout_t2).probabilities.tolist(),
        "regimes": [1],
    }
    response = client.post("/bounds", json=body)
    assert response.status_code == 200
    bounds = response.json()["bounds"][0]
    assert bounds["lower"] <= 0.5 <= bounds["upper"]
    response = client.post("/bounds", json={**body, "markov": False})
    assert response.status_code == 422
    assert response.json()["detail"]["error"] == "DimensionError"
