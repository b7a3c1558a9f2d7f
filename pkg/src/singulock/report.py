"""Unified analysis report: parse -> explore -> detect -> versioned JSON."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

from . import __version__
from .calculus import Program
from .homology import generator_cycles, homology_h0, homology_h1, persistent_h1
from .semantics import BoundRefusal, ExecutionGraph, condensation, explore
from .singularity import (
    DIVERGENT,
    bisim_minimize,
    deadlock_attractors,
    detect_livelocks,
    future_classes_bounded,
    severity,
)
from .topology import POLICIES, WEAK, STRONG, build_complex, depth_filtration, fair_edges, restrict

REPORT_SCHEMA = "singulock.report/1"

EXIT_OK = 0
EXIT_DEADLOCK = 10
EXIT_LIVELOCK = 11
EXIT_BOTH = 12
EXIT_FAULT_ONLY = 13
EXIT_INPUT = 2
EXIT_BOUND = 3


@dataclass
class AnalysisConfig:
    input: str = "-"
    fairness: str = WEAK
    cells: str = "both"
    max_states: int = 100_000
    max_depth: int = 10_000
    kmax: int | None = None
    future_depth: int = 4
    format: str = "json"
    dot: str | None = None
    csv: str | None = None
    seed: str | None = None

    def __post_init__(self):
        if self.fairness not in (WEAK, STRONG):
            raise ValueError(f"fairness must be weak or strong, not {self.fairness!r}")
        if self.cells not in POLICIES:
            raise ValueError(f"cells must be one of {', '.join(POLICIES)}")
        if self.format not in ("json", "text"):
            raise ValueError(f"format must be json or text, not {self.format!r}")
        for name in ("max_states", "max_depth"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.kmax is not None and self.kmax < 0:
            raise ValueError("kmax must be >= 0")
        if self.future_depth < 0:
            raise ValueError("future_depth must be >= 0")


def _walk(graph: ExecutionGraph, walk):
    if walk.directed:
        verts = [graph.edges[walk.edges[0]].src] + [graph.edges[i].dst for i in walk.edges]
        return {
            "directed": True,
            "edges": list(walk.edges),
            "vertices": verts,
            "labels": [str(graph.edges[i].label) for i in walk.edges],
        }
    return {"directed": False, "chain": [[e, c] for e, c in walk.edges]}


def _death(d):
    return None if d == math.inf else d


def exit_code(report: dict) -> int:
    v = report["verdict"]
    if v["truncated"]:
        return EXIT_BOUND
    if v["deadlock"] and v["livelock"]:
        return EXIT_BOTH
    if v["deadlock"]:
        return EXIT_DEADLOCK
    if v["livelock"]:
        return EXIT_LIVELOCK
    if v["fault_only"]:
        return EXIT_FAULT_ONLY
    return EXIT_OK


def analyze(program: Program, config: AnalysisConfig, graph: ExecutionGraph | None = None) -> dict:
    """Run every detector and assemble the report dictionary."""
    g = graph if graph is not None else explore(program, config.max_states, config.max_depth)
    K = build_complex(g, config.cells)
    cond = condensation(g)
    dl = deadlock_attractors(g, config.fairness)
    ll = detect_livelocks(g, config.cells, config.fairness, complex=K)
    fa = fair_edges(g, config.fairness)
    h1 = homology_h1(K)
    sev = severity(dl, ll, g)

    attractors = []
    basins = []
    faults = []
    for k, a in enumerate(dl.attractors):
        entry = {
            "id": k,
            "kind": a.trap.kind,
            "vertices": sorted(a.trap.vertices),
            "internal_edges": a.trap.internal_edges,
            "basin_size": len(a.basin),
            "deadlock": a.is_deadlock,
            "frontier": a.frontier,
        }
        if a.trap.kind == DIVERGENT:
            sub = restrict(K, a.trap.vertices)
            entry["fair"] = a.fair
            entry["see_livelock"] = a.fair
            entry["cycle_rank"] = homology_h1(sub).betti
        if a.contains_fault:
            faults.append(entry)
        else:
            attractors.append(entry)
        basins.append({"attractor": k, "vertices": sorted(a.basin), "fraction": len(a.basin) / g.num_vertices})

    try:
        filtration = depth_filtration(g, config.cells, config.kmax)
        pairs = persistent_h1(filtration)
        persistence = {
            "k_max": len(filtration) - 1,
            "pairs": [[p.birth, _death(p.death), list(p.representative)] for p in pairs],
        }
    except ValueError as exc:
        persistence = {"error": str(exc)}

    futures = []
    origins = [("root", g.root)] + [(f"attractor-{a['id']}", a["vertices"][0]) for a in attractors if a["deadlock"]]
    for name, v in origins:
        try:
            fc = future_classes_bounded(g, K, v, config.future_depth)
            futures.append(
                {
                    "origin": name,
                    "vertex": v,
                    "depth": fc.depth,
                    "classes": fc.count,
                    "representatives": [list(w) for w in fc.representatives],
                    "collapse": fc.collapse,
                    "deadlock_collapse": fc.deadlock_collapse,
                }
            )
        except BoundRefusal as exc:
            futures.append({"origin": name, "vertex": v, "depth": config.future_depth, "refused": str(exc)})

    deadlock = any(a["deadlock"] for a in attractors)
    livelock = ll.livelock_present
    classes = [c.kind for c in g.classes]
    report = {
        "schema": REPORT_SCHEMA,
        "header": {
            "tool": "singulock",
            "version": __version__,
            "input": config.input,
            "seed": config.seed,
            "config": {
                "fairness": config.fairness,
                "cells": config.cells,
                "max_states": config.max_states,
                "max_depth": config.max_depth,
                "kmax": config.kmax,
                "future_depth": config.future_depth,
            },
        },
        "graph-stats": {
            "vertices": g.num_vertices,
            "edges": len(g.edges),
            "terminal": classes.count("terminal"),
            "fault": classes.count("fault"),
            "max_depth": max(g.depths, default=0),
            "sccs": len(cond.members),
            "two_cells": len(K.two_cells),
            "truncated": g.truncated,
        },
        "attractors": attractors,
        "basins": basins,
        "fault-traps": faults,
        "fair-analysis": {
            "mode": config.fairness,
            "fair_sccs": len(fa.fair_sccs),
            "fair_edges": len(fa.fair_edges),
            "fair_vertices": len(fa.fair_vertices),
            "unfair_edges": sorted(set(range(len(g.edges))) - fa.fair_edges),
            "recurrent_regions": [list(r) for r in ll.regions],
        },
        "homology": {
            "betti0": homology_h0(K),
            "betti1": h1.betti,
            "torsion": list(h1.torsion),
            "generators": [_walk(g, w) for w in generator_cycles(K, h1)],
        },
        "fair-homology": {
            "betti1": ll.fair_h1.betti,
            "torsion": list(ll.fair_h1.torsion),
            "livelock_rank": ll.livelock_rank,
            "livelock_present": livelock,
            "undirected_classes": ll.undirected_classes,
            "witnesses": [_walk(g, w) for w in ll.witnesses],
            "generators": [_walk(g, w) for w in ll.generators],
        },
        "persistence": persistence,
        "future-classes": futures,
        "severity": {
            "basin_fractions": [{"attractor": k, "fraction": f} for k, (_, f) in enumerate(sev.basin_fractions)],
            "fair_betti1": sev.fair_betti,
            "fair_torsion": list(sev.fair_torsion),
            "livelock_rank": sev.livelock_rank,
        },
        "caveats": {
            "truncated": g.truncated,
            "benign_cycle": livelock and ll.benign_caveat,
        },
        "verdict": {
            "deadlock": deadlock,
            "livelock": livelock,
            "fault_only": bool(faults) and not deadlock and not livelock,
            "truncated": g.truncated,
        },
    }
    report["verdict"]["exit_code"] = exit_code(report)
    return report


def to_json(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True) + "\n"


def render_text(report: dict) -> str:
    """Stable human-readable rendering of a report."""
    s = report["graph-stats"]
    fh = report["fair-homology"]
    h = report["homology"]
    v = report["verdict"]
    lines = [
        f"singulock {report['header']['version']} report for {report['header']['input']}",
        f"graph: {s['vertices']} states, {s['edges']} transitions, {s['two_cells']} two-cells, "
        f"{s['terminal']} terminal, {s['fault']} fault" + (" (TRUNCATED)" if s["truncated"] else ""),
    ]
    if report["attractors"]:
        lines.append("attractors:")
        for a in report["attractors"]:
            tag = "DEADLOCK" if a["deadlock"] else "fair divergent region, see livelocks"
            lines.append(f"  #{a['id']} {a['kind']} {tag}: states {a['vertices']} basin {a['basin_size']}")
    else:
        lines.append("attractors: none")
    for a in report["fault-traps"]:
        lines.append(f"  modelling fault trap #{a['id']}: states {a['vertices']}")
    lines.append(f"homology: betti0={h['betti0']} betti1={h['betti1']} torsion={h['torsion']}")
    lines.append(
        f"fair homology ({report['fair-analysis']['mode']}): betti1={fh['betti1']} torsion={fh['torsion']} "
        f"livelock rank={fh['livelock_rank']}"
    )
    for w in fh["witnesses"]:
        lines.append("  witness: " + " -> ".join(map(str, w["vertices"])) + "  [" + ", ".join(w["labels"]) + "]")
    p = report["persistence"]
    if "pairs" in p:
        inf = sum(1 for b, d, _ in p["pairs"] if d is None)
        lines.append(f"persistence: {len(p['pairs'])} pairs, {inf} essential, k_max={p['k_max']}")
    for f in report["future-classes"]:
        if "refused" in f:
            lines.append(f"future classes at {f['origin']}: refused ({f['refused']})")
        else:
            lines.append(
                f"future classes at {f['origin']} depth {f['depth']}: {f['classes']}"
                + (" (collapse)" if f["collapse"] else "")
            )
    if report["caveats"]["benign_cycle"]:
        lines.append("note: fair cycles may be productive loops; progress is not modelled")
    lines.append(
        f"verdict: deadlock={'yes' if v['deadlock'] else 'no'} livelock={'yes' if v['livelock'] else 'no'} "
        f"exit={v['exit_code']}"
    )
    return "\n".join(lines) + "\n"


def minimization_invariants(graph: ExecutionGraph, policy: str = "both", mode: str = WEAK, observe: str = "memory"):
    """((betti, torsion) of H1, of fair H1) before and after bisimulation minimization."""

    def sig(g):
        ll = detect_livelocks(g, policy, mode)
        h = homology_h1(build_complex(g, policy))
        return (h.betti, h.torsion), (ll.fair_h1.betti, ll.fair_h1.torsion)

    return sig(graph), sig(bisim_minimize(graph, observe))
