"""Work/size caps, overridable through the HOMENGINE_CAPS environment variable.

HOMENGINE_CAPS holds a JSON object, e.g.

    HOMENGINE_CAPS='{"oracle_nodes": 100000}'

Unknown keys are rejected so typos do not silently leave a cap at its
default.
"""

import json
import os

DEFAULTS = {
    # product digraph construction refuses above this many product vertices
    "product_vertices": 10**7,
    # detection-instance construction refuses above this many G-vertices
    "detection_vertices": 10**6,
    # brute-force oracle gives up (CapExceeded) after this many search nodes
    "oracle_nodes": 10**8,
    # brute-force operation search: max domain size per arity
    "find_op_domain_arity3": 4,
    "find_op_domain_arity4": 3,
    # brute-force operation search gives up after this many search nodes
    "find_op_nodes": 10**7,
    # "oracle" back-end for the Maltsev phase refuses above this many vertices
    "maltsev_oracle_max_vertices": 64,
    # packed-domain width of the list engine (one machine word per list)
    "bitset_domain": 64,
}

_ENV_VAR = "HOMENGINE_CAPS"


def get_caps(overrides=None):
    """Effective caps: defaults, then HOMENGINE_CAPS, then explicit overrides."""
    caps = dict(DEFAULTS)
    raw = os.environ.get(_ENV_VAR)
    if raw:
        try:
            env = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise ValueError(f"{_ENV_VAR} is not valid JSON: {exc}") from exc
        if not isinstance(env, dict):
            raise ValueError(f"{_ENV_VAR} must be a JSON object")
        for key, val in env.items():
            if key not in DEFAULTS:
                raise ValueError(f"{_ENV_VAR}: unknown cap {key!r}")
            caps[key] = int(val)
    if overrides:
        for key, val in overrides.items():
            if key not in DEFAULTS:
                raise ValueError(f"unknown cap {key!r}")
            caps[key] = int(val)
    return caps
