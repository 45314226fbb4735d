"""Regenerate the frozen constrained-planning fixtures.

Run `python tests/_generate_curated.py` from the repo root. Instances are
random small graphs with three constraint families (hop limits, rest-time
limits, surface-equality skips). The exhaustive enumerator is the oracle:
its objective is frozen into curated_constrained.json for instances where
the single-label search agrees, and divergences found along the way are
frozen into known_divergence.json with the oracle's objective and the
search's actual outcome.
"""

from __future__ import annotations

import json
import random
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent))

from querynav.errors import NoRoute
from querynav.planner import brute_force_plan, model_from_dict, plan_route

from conftest import graph_from_dict

HERE = Path(__file__).resolve().parent
OUT = HERE / "fixtures"


def random_instance(rng: random.Random) -> dict:
    n = rng.randint(3, 7)
    m = rng.randint(n, 14)
    edges = []
    for i in range(m):
        u, v = rng.sample(range(n), 2)
        edges.append(
            {
                "id": f"e{i}",
                "from": [u, 0],
                "to": [v, 0],
                "length_m": rng.randint(1, 50),
                "attributes": {
                    "time_h": float(rng.randint(1, 6)),
                    "no_rest": float(rng.choice([0, 1, 1, 1])),
                    "surface": rng.choice(["dry", "dry", "wet", "ice"]),
                },
            }
        )
    nodes = sorted({tuple(e["from"]) for e in edges} | {tuple(e["to"]) for e in edges})

    family = rng.choice(["hops", "rest", "surface", "hops+surface"])
    attributes = [{"name": "cost", "description": "accumulated length"}]
    actions = [
        {"name": "add_len", "description": "", "target": "cost", "operation": "add",
         "value": {"source": "edge", "attribute": "length_m"}},
    ]
    constraints = []
    if "hops" in family:
        attributes.append({"name": "hops", "description": "edges taken"})
        actions.append({"name": "hop", "description": "", "target": "hops",
                        "operation": "add", "value": 1})
        constraints.append({"name": "hop_limit", "description": "",
                            "operator": ">", "operand1": {"source": "driver", "attribute": "hops"},
                            "operand2": rng.randint(2, 4), "action": "skip-edge"})
    if "rest" in family:
        attributes.append({"name": "time_since_rest", "description": "hours since a rest edge"})
        actions.append({"name": "maybe_reset", "description": "rest edges zero the clock",
                        "target": "time_since_rest", "operation": "multiply",
                        "value": {"source": "edge", "attribute": "no_rest"}})
        actions.append({"name": "tick", "description": "", "target": "time_since_rest",
                        "operation": "add", "value": {"source": "edge", "attribute": "time_h"}})
        constraints.append({"name": "rest_limit", "description": "",
                            "operator": ">", "operand1": {"source": "driver", "attribute": "time_since_rest"},
                            "operand2": rng.randint(5, 9), "action": "skip-edge"})
    if "surface" in family:
        constraints.append({"name": "avoid_ice", "description": "",
                            "operator": "=", "operand1": {"source": "edge", "attribute": "surface"},
                            "operand2": "ice", "action": "skip-edge"})

    return {
        "family": family,
        "graph": {"nodes": [list(x) for x in nodes], "edges": edges},
        "model": {
            "driver": {"attributes": attributes, "objective": "cost"},
            "actions": actions,
            "constraints": constraints,
        },
        "start": list(nodes[0]),
        "target": list(nodes[-1]),
    }


def main():
    rng = random.Random(20240131)
    curated = []
    divergent = []
    tried = 0
    while (len(curated) < 36 or len(divergent) < 2) and tried < 4000:
        tried += 1
        inst = random_instance(rng)
        g = graph_from_dict(inst["graph"])
        spec, actions, cons = model_from_dict(inst["model"])
        s, t = tuple(inst["start"]), tuple(inst["target"])
        try:
            oracle = brute_force_plan(g, s, t, spec, actions, cons, max_edges=10)
        except NoRoute:
            continue
        try:
            got = plan_route(g, s, t, spec, actions, cons)
        except NoRoute:
            got = None
        if got is not None and got.objective_value == oracle.objective_value:
            if len(curated) < 36:
                inst["oracle_objective"] = oracle.objective_value
                curated.append(inst)
        else:
            if len(divergent) < 4:
                inst["oracle_objective"] = oracle.objective_value
                inst["search_objective"] = None if got is None else got.objective_value
                divergent.append(inst)

    OUT.mkdir(exist_ok=True)
    (OUT / "curated_constrained.json").write_text(json.dumps(curated, indent=1) + "\n")
    (OUT / "known_divergence.json").write_text(json.dumps(divergent, indent=1) + "\n")
    fams = {}
    for c in curated:
        fams[c["family"]] = fams.get(c["family"], 0) + 1
    print(f"curated: {len(curated)} {fams}; divergent: {len(divergent)}; tried {tried}")


if __name__ == "__main__":
    main()
