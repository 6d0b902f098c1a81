import json

from ._privkey import (
    dephased_max_entangled,
    hypothesis_testing_divergence,
    l_max,
    relative_entropy,
    run_cli,
    typical_mass,
    typical_size,
    yield_cost_bounds,
)

__all__ = [
    "dephased_max_entangled",
    "hypothesis_testing_divergence",
    "l_max",
    "relative_entropy",
    "run",
    "run_cli",
    "typical_mass",
    "typical_size",
    "yield_cost_bounds",
]


def run(*args):
    """Run a CLI command and parse its JSON lines; raises on a usage error."""
    code, out, err = run_cli([str(a) for a in args])
    if code == 2:
        raise ValueError(err.strip())
    return code, [json.loads(line) for line in out.splitlines() if line.strip()]
