"""HTTP service exposing experiment runs.

POST /run executes a RunConfig and returns the result rows; the CLI's
presets are browsable under /presets.  Long sweeps run synchronously:
the service is a thin wrapper for lab automation, not a job queue.
"""

from __future__ import annotations

import argparse
from dataclasses import asdict
from typing import Optional

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel

from sdnscp import __version__
from sdnscp.config import PRESETS, RunConfig
from sdnscp.runner import ResultRow, run_experiment

app = FastAPI(
    title="sdnscp",
    version=__version__,
    description="5G core control-plane signaling simulator with an SDN service mesh",
)


class ResultRowModel(BaseModel):
    scenario: str
    rate_per_s: Optional[float]
    connections: Optional[int]
    total_packets: Optional[int]
    packets_through_app: Optional[int]
    pct_through_app: Optional[float]
    throughput_rps: float
    p50_ms: float
    p95_ms: float
    failed_flows: int
    seed: int


class RunResponse(BaseModel):
    rows: list[ResultRowModel]


@app.get("/healthz")
def healthz() -> dict:
    return {"status": "ok", "version": __version__}


@app.get("/presets")
def list_presets() -> dict:
    return {"presets": sorted(PRESETS)}


@app.get("/presets/{name}")
def get_preset(name: str) -> dict:
    if name not in PRESETS:
        raise HTTPException(status_code=404, detail=f"unknown preset: {name}")
    return {"name": name, "values": PRESETS[name]}


@app.post("/run", response_model=RunResponse)
def run(config: RunConfig) -> RunResponse:
    try:
        rows: list[ResultRow] = run_experiment(config)
    except Exception as exc:
        raise HTTPException(status_code=500, detail=str(exc))
    return RunResponse(rows=[ResultRowModel(**asdict(row)) for row in rows])


def main(argv: Optional[list[str]] = None) -> int:
    import uvicorn

    parser = argparse.ArgumentParser(prog="sdnscp-serve", description="serve the experiment API")
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8000)
    args = parser.parse_args(argv)
    uvicorn.run(app, host=args.host, port=args.port)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
