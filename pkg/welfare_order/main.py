"""
Welfare ordering service 'main' module.
"""
import uvicorn
from fastapi import FastAPI

from welfare_order import __version__, settings
from welfare_order.routers import health, ordering, regimes

app = FastAPI(title="welfare-order", version=__version__)


@app.on_event("startup")
async def startup():
    settings.configure_logging()


app.include_router(health.router)
app.include_router(regimes.router)
app.include_router(ordering.router)

if __name__ == "__main__":
    uvicorn.run(app, host="0.0.0.0", port=8000)
