"""
Service liveness and the published HTTP surface
"""
from fastapi.testclient import TestClient

from welfare_order import __version__
from welfare_order.main import app

client = TestClient(app)


def test_health_check():
    """test_health_check
    The service answers on its root path
    """
    response = client.get("/")
    assert response.status_code == 200
    assert response.json() == {"status": "ok"}


def test_openapi_paths():
    """test_openapi_paths
    The schema names the service, its version and every endpoint
    """
    schema = client.get("/openapi.json").json()
    assert schema["info"]["title"] == "welfare-order"
    assert schema["info"]["version"] == __version__
    assert {"/", "/regimes", "/order", "/bounds"} <= set(schema["paths"])
