#!/usr/bin/env python3
"""End-to-end smoke test for the sosim Python bindings.

Build the extension first, then run this script from anywhere:

    cargo build -p sosim-py
    python3 python/smoke_test.py

The script locates the compiled cdylib under target/, stages it on
sys.path under the importable name, and walks the main workflow:
fixtures, validation, GML round trip, prices, allocation, scenario runs,
and supply curves.
"""

import math
import shutil
import sys
import tempfile
from pathlib import Path

REPO = Path(__file__).resolve().parent.parent


def stage_extension() -> None:
    candidates = [
        REPO / "target" / profile / name
        for profile in ("debug", "release")
        for name in ("libsosim.so", "sosim.so", "libsosim.dylib")
    ]
    built = [p for p in candidates if p.exists()]
    if not built:
        sys.exit("extension not built; run `cargo build -p sosim-py` first")
    newest = max(built, key=lambda p: p.stat().st_mtime)
    stage = Path(tempfile.mkdtemp(prefix="sosim-py-"))
    shutil.copy2(newest, stage / "sosim.so")
    sys.path.insert(0, str(stage))


stage_extension()
import sosim  # noqa: E402


def check(label: str, ok: bool) -> None:
    if not ok:
        sys.exit(f"FAIL {label}")
    print(f"ok {label}")


check("version", isinstance(sosim.version(), str) and sosim.version())
check("rng algorithm recorded", sosim.RNG_ALGORITHM == "splitmix64")

# Three-agent fixture: structure, prices, and the known optimal total.
net = sosim.Network.three_node_fixture()
check("fixture validates", net.validate() == [])
check("fixture shape", net.agent_count == 3 and net.link_count == 3)
check("resource names", len(net.resource_names) == 3)

prices = sosim.solve_prices(net)
kind, unit = prices.decision(3, 2)
check("consumer makes its goods", kind == "make")
check("sell cost positive", prices.sell_cost(3, 2) > 0.0)
check("converged in bounded sweeps", prices.sweeps > 0)

alloc = sosim.allocate(net)
check("fixture fully served", alloc.total_shortfall == 0.0)
check("fixture optimal total", math.isclose(alloc.total_cost, 9.3, rel_tol=1e-9))
check("fixture invariants", alloc.check(net) == [])

# GML round trip is structure- and byte-stable.
text = net.to_gml()
parsed, warnings = sosim.Network.from_gml(text)
check("gml parses clean", warnings == [])
check("gml round trip", parsed.to_gml() == text)

# Block fixture: base run, severity scenarios, and supply-curve fractions.
block = sosim.Network.block_fixture()
base = sosim.run_stationary(block, horizon=1)
check("base served at reference price",
      base.curve.satisfied_fraction(sosim.REFERENCE_PRICE) == 1.0)
check("deterministic reruns",
      sosim.run_stationary(block, horizon=1).total_costs == base.total_costs)

order = sosim.severity_order()
check("severity order shape", sorted(order) == list(range(1, 9)))
heaviest = sosim.run_severity_scenario(block, order[-1])
check("disruption raises cost",
      heaviest.final_total_cost > base.final_total_cost)
check("heaviest starves reference price",
      heaviest.curve.satisfied_fraction(sosim.REFERENCE_PRICE) == 0.0)

# Scenario TOML, same schema the CLI consumes.
tripled = sosim.run_scenario_toml(
    net,
    """
name = "expensive haulage"
horizon = 2
[[events]]
at = 1
kind = "link_cost_scale"
link = 2
factor = 4.0
""",
)
check("toml scenario runs", len(tripled.total_costs) == 2)
check("cost bump shows up", tripled.final_total_cost > alloc.total_cost)

# Random generation stays well-formed and conservative.
rand_net = sosim.Network.erdos_renyi(30, 0.2, 3, seed=7)
check("random net validates", rand_net.validate() == [])
rand_alloc = sosim.allocate(rand_net)
check("random net invariants", rand_alloc.check(rand_net) == [])
check("rounds reported", rand_alloc.rounds >= 1)

print("smoke test passed")
