"""
JSON documents emitted by the command line.

The shipped schemas in docs/schemas are generated from these models by
``export_schemas``.
"""

import json
from pathlib import Path
from typing import Dict, List, Optional

from pydantic import BaseModel, RootModel

SCHEMA_FILES = {
    'fit.schema.json': 'FitDocument',
    'compare.schema.json': 'ComparisonDocument',
    'eval.schema.json': 'EvalDocument',
}


class FitDocument(BaseModel):
    model: str
    estimates: List[float]
    log_likelihood: float
    aic: float
    converged: bool
    n_evaluations: int
    restarts_used: int
    seed: int


class ComparisonRowDocument(BaseModel):
    model: str
    estimates: List[float]
    log_likelihood: Optional[float]
    aic: Optional[float]
    ks_distance: Optional[float]
    error: Optional[str]


class ComparisonDocument(RootModel[List[ComparisonRowDocument]]):
    pass


class EvalPoint(BaseModel):
    t: float
    pdf: float
    cdf: float
    reliability: float
    hazard: Optional[float]


class EvalDocument(BaseModel):
    params: List[float]
    points: List[EvalPoint]
    moments: Dict[str, float]
    laplace: Dict[str, float]
    quantiles: Dict[str, float]


def document_models():
    return {
        'FitDocument': FitDocument,
        'ComparisonDocument': ComparisonDocument,
        'EvalDocument': EvalDocument,
    }


def export_schemas(directory: Path) -> List[Path]:
    """Write one JSON Schema per document type into ``directory``."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    models = document_models()
    written = []
    for filename, name in SCHEMA_FILES.items():
        path = directory / filename
        path.write_text(json.dumps(models[name].model_json_schema(), indent=2, sort_keys=True) + '\n',
                        encoding='utf-8')
        written.append(path)
    return written
