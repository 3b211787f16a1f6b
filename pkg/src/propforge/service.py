"""HTTP facade over the trained models and the simulator.

Endpoints (JSON, schema in docs/api-schema.json):
  POST /api/generate  — sample designs for target labels, surrogate-validated
  POST /api/simulate  — open-water curve + labels of one design
  POST /api/geometry  — section table of one design
  GET  /api/model-info — checkpoint metadata, label envelopes, slider ranges

The service holds immutable loaded checkpoints only; requests never mutate
server state.  Invariant violations map to 400, missing checkpoints to 503.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from fastapi import FastAPI, HTTPException, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field

from . import cfm as cfm_engine
from . import geometry, hydro, surrogate
from .geometry import DESIGN_FIELDS, BLADE_COUNTS, _CONTINUOUS_RANGES
from .hydro import LABEL_FIELDS

MAX_GENERATE_COUNT = 1000

SURROGATE_FILE = "surrogates.ckpt"
CFM_FILE = "cfm.ckpt"


class Targets(BaseModel):
    eta_star: float | None = None
    j_star: float | None = None
    kt_star: float | None = None


class GenerateRequest(BaseModel):
    targets: Targets
    count: int = Field(default=100, ge=1, le=MAX_GENERATE_COUNT)
    steps: int = Field(default=100, ge=1, le=2000)
    seed: int | None = None
    tolerance: float = Field(default=surrogate.DEFAULT_VALIDITY_TOL, gt=0)


class DesignBody(BaseModel):
    n_blades: int
    P: float
    w_rp: float
    w_c: float
    w_rc: float
    camber: float


def _design_from_body(body: DesignBody) -> geometry.DesignVector:
    try:
        return geometry.DesignVector(**body.model_dump())
    except ValueError as exc:
        raise HTTPException(status_code=400, detail=str(exc)) from exc


def create_app(data_dir=None, cfm_model=None, surrogates=None) -> FastAPI:
    """Build the service; checkpoints load lazily from data_dir unless the
    models are injected directly (tests do the latter)."""
    root = Path(data_dir) if data_dir is not None else None
    state = {"cfm": cfm_model, "surrogates": surrogates}

    def get_cfm():
        if state["cfm"] is None and root is not None:
            path = root / CFM_FILE
            if path.exists():
                state["cfm"] = cfm_engine.load_cfm(path)
        if state["cfm"] is None:
            raise HTTPException(status_code=503, detail="cfm checkpoint not loaded")
        return state["cfm"]

    def get_surrogates():
        if state["surrogates"] is None and root is not None:
            path = root / SURROGATE_FILE
            if path.exists():
                state["surrogates"] = surrogate.load_surrogates(path)
        if state["surrogates"] is None:
            raise HTTPException(status_code=503, detail="surrogate checkpoint not loaded")
        return state["surrogates"]

    app = FastAPI(title="propforge design service", version="0.1.0")

    @app.exception_handler(RequestValidationError)
    async def validation_handler(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400, content={"detail": exc.errors()})

    @app.get("/api/model-info")
    def model_info():
        info = {
            "design_ranges": {
                "n_blades": list(BLADE_COUNTS),
                **{name: list(span) for name, span in _CONTINUOUS_RANGES.items()},
            },
            "grid": [float(j) for j in hydro.DEFAULT_GRID],
            "cfm": None,
            "surrogates": None,
            "label_envelope": None,
        }
        try:
            model = get_cfm()
            info["cfm"] = {
                "hidden_layers": model.net.config.hidden_layers,
                "hidden_width": model.net.config.hidden_width,
                "parameters": model.net.n_parameters(),
            }
            info["label_envelope"] = {
                name: [float(model.label_min[k]), float(model.label_max[k])]
                for k, name in enumerate(LABEL_FIELDS)
            }
        except HTTPException:
            pass
        try:
            surro = get_surrogates()
            any_model = surro.models[LABEL_FIELDS[0]]
            info["surrogates"] = {
                "hidden_layers": any_model.config.hidden_layers,
                "hidden_width": any_model.config.hidden_width,
                "labels": list(LABEL_FIELDS),
            }
        except HTTPException:
            pass
        return info

    @app.post("/api/generate")
    def generate(req: GenerateRequest):
        model = get_cfm()
        surro = get_surrogates()
        try:
            spec = cfm_engine.TargetSpec(**req.targets.model_dump())
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        seed = req.seed if req.seed is not None else int(np.random.SeedSequence().entropy % 2**31)
        report = cfm_engine.sample_designs(model, spec, req.count,
                                           steps=req.steps, seed=seed)
        matrix = np.array([d.to_array() for d in report.designs])
        predicted = surrogate.predict_matrix(surro, matrix)
        targeted = spec.as_dict()
        valid = surrogate.validate_designs(surro, matrix, targeted, tol=req.tolerance)
        designs = []
        for i, design in enumerate(report.designs):
            designs.append({
                "design": {name: (design.n_blades if name == "n_blades"
                                  else getattr(design, name))
                           for name in DESIGN_FIELDS},
                "predicted_labels": {name: float(predicted[i, k])
                                     for k, name in enumerate(LABEL_FIELDS)},
                "valid": bool(valid[i]),
                "clamped": [name for name, f in zip(DESIGN_FIELDS,
                                                    report.clamped_flags[i]) if f],
                "sampled_condition": {name: float(report.sampled_conditions[i, k])
                                      for k, name in enumerate(LABEL_FIELDS)},
            })
        return {
            "designs": designs,
            "targets": targeted,
            "tolerance": req.tolerance,
            "seed": seed,
            "stats": {
                "count": len(designs),
                "valid_count": int(valid.sum()),
                "valid_fraction": float(valid.mean()) if len(designs) else 0.0,
            },
        }

    @app.post("/api/simulate")
    def simulate(body: DesignBody):
        design = _design_from_body(body)
        curve = hydro.simulate_design(design)
        labels = hydro.extract_labels(curve)
        ok = (curve.kt > 0) & (curve.kq > 0)
        eta = np.where(ok, curve.grid * curve.kt
                       / (2 * np.pi * np.where(ok, curve.kq, 1.0)), np.nan)
        return {
            "curve": {
                "j": [float(v) for v in curve.grid],
                "kt": [float(v) for v in curve.kt],
                "kq": [float(v) for v in curve.kq],
                "eta": [None if not np.isfinite(v) else float(v) for v in eta],
            },
            "labels": None if labels is None else {
                "eta_star": labels.eta_star,
                "j_star": labels.j_star,
                "kt_star": labels.kt_star,
            },
            "valid": labels is not None,
            "converged_fraction": float(curve.station_flags.mean()),
        }

    @app.post("/api/geometry")
    def geometry_endpoint(body: DesignBody):
        design = _design_from_body(body)
        return {"rows": geometry.export_sections(geometry.build_blade(design))}

    frontend = Path(__file__).resolve().parents[2] / "frontend" / "dist"
    if frontend.exists():
        app.mount("/", StaticFiles(directory=frontend, html=True), name="studio")
    return app
