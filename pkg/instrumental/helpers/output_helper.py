import json
import logging
import os

import numpy as np
import pandas as pd

from .numeric_helper import format_number
from .scenario_helper import SCHEMA_VERSION
from .simulation_helper import RNG_ALGORITHM

logger = logging.getLogger(__name__)

# --- Common Constants ---
JSON_INDENT = 2
CURVE_COLUMNS = ['alpha', 'dependence', 'segment_slope']
BREAKPOINT_COLUMNS = ['alpha', 'dependence']


def to_jsonable(value):
    """Fractions become strings, numpy scalars and arrays become plain JSON values."""
    if isinstance(value, dict):
        return {str(key): to_jsonable(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(item) for item in value]
    if isinstance(value, np.ndarray):
        return to_jsonable(value.tolist())
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, (np.integer, np.floating)):
        return format_number(value.item())
    if isinstance(value, (bool, str)) or value is None:
        return value
    return format_number(value)


def document(payload, seed=None):
    """``payload`` with the schema version and, when a seed was used, the RNG identity."""
    body = {'schema_version': SCHEMA_VERSION}
    if seed is not None:
        body['rng'] = {'algorithm': RNG_ALGORITHM, 'seed': seed}
    body.update(to_jsonable(payload))
    return body


def dumps(payload, seed=None):
    return json.dumps(document(payload, seed), indent=JSON_INDENT, sort_keys=True)


def curve_frame(curve, grid_points):
    rows = [(alpha, dependence, slope) for alpha, dependence, slope in curve.sample(grid_points)]
    return pd.DataFrame([[format_number(value) for value in row] for row in rows], columns=CURVE_COLUMNS)


def breakpoints_frame(curve):
    return pd.DataFrame([[format_number(alpha), format_number(value)] for alpha, value in curve.breakpoints],
                        columns=BREAKPOINT_COLUMNS)


class ResultWriter:
    def __init__(self, output_stream=None, style=None):
        self.output_stream = output_stream if output_stream is not None else print
        self.style = style

    def _log(self, message, style_func=None):
        if style_func:
            self.output_stream(style_func(message))
        else:
            self.output_stream(message)

    def _prepare(self, path):
        directory = os.path.dirname(os.path.abspath(path))
        os.makedirs(directory, exist_ok=True)

    def emit_json(self, payload, path=None, seed=None):
        """Writes the document to ``path``, or to the output stream when no path is given."""
        text = dumps(payload, seed)
        if path is None:
            self._log(text)
            return text
        self._prepare(path)
        with open(path, 'w', encoding='utf-8') as f:
            f.write(text + '\n')
        logger.info(f"Wrote {path}")
        self._log(f"Wrote {path}", self.style.SUCCESS if self.style else None)
        return text

    def emit_curve_csv(self, curve, path, grid_points):
        self._prepare(path)
        curve_frame(curve, grid_points).to_csv(path, index=False)
        root, extension = os.path.splitext(path)
        breakpoints_path = f"{root}.breakpoints{extension or '.csv'}"
        breakpoints_frame(curve).to_csv(breakpoints_path, index=False)
        logger.info(f"Wrote {path} and {breakpoints_path}")
        self._log(f"Wrote {path} ({grid_points} grid points) and {breakpoints_path}",
                  self.style.SUCCESS if self.style else None)
        return path, breakpoints_path
