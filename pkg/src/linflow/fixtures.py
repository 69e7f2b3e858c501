"""Named example maps, terms and data shipped with the package."""
from __future__ import annotations

import json
from functools import lru_cache
from importlib import resources

from .lambda_terms import LinearTerm, parse, term_to_map
from .maps import Orientation, RootedMap, close_map, map_from_drawing

_BEND_L, _BEND_R = {"bend": 30}, {"bend": -30}


def load_json(name: str) -> dict:
    return json.loads(resources.files("linflow").joinpath("data", name).read_text())


def oeis() -> dict:
    return {k: v for k, v in load_json("oeis.json").items() if not k.startswith("_")}


def oeis_prefix(family: str, k: int) -> list[int]:
    """Values for family sizes n = 1..k, aligned through the stored shift."""
    entry = oeis()[family]
    out = []
    for n in range(1, k + 1):
        i = n + entry["shift"] - entry["offset"]
        if not 0 <= i < len(entry["values"]):
            raise IndexError(f"{entry['id']} prefix too short for n={n}")
        out.append(entry["values"][i])
    return out


def k4() -> tuple[RootedMap, Orientation, dict[int, int]]:
    """Planar K4 with a nowhere-zero integer flow (values keyed by edge)."""
    coords = {"ly": (-0.433, -0.25), "lz": (0, 0.5), "ax": (0.433, -0.25), "ay": (0, 0)}
    edges = [("lz", "ly"), ("ly", "ax"), ("ly", "ay"), ("lz", "ay"), ("ax", "lz"), ("ay", "ax")]
    M, O, pos = map_from_drawing(coords, edges, "lz", external=False, root_edge=0)
    values = [3, 2, 1, 2, 5, 3]
    return M, O, {pos[k] & ~1: x for k, x in enumerate(values)}


def z3_graph() -> tuple[RootedMap, Orientation, dict[int, str]]:
    """A graph with a Z3-flow that has a zero edge."""
    coords = {"a": (0.5, 1), "b": (0, 0.5), "c": (0.5, 0), "d": (1, 0.5),
              "e": (1.5, 0.5), "f": (2, 0), "g": (2.5, 0.5), "h": (2, 1)}
    edges = [("a", "b"), ("b", "c"), ("c", "d"), ("d", "a"), ("d", "b"), ("d", "e"),
             ("e", "f"), ("e", "g"), ("f", "g"), ("g", "h"), ("h", "e")]
    M, O, pos = map_from_drawing(coords, edges, "a", external=False, root_edge=0)
    values = [2, 1, 1, 2, 2, 0, 2, 2, 2, 1, 1]
    return M, O, {pos[k] & ~1: str(x) for k, x in enumerate(values)}


def nonglobal_first() -> tuple[RootedMap, Orientation, dict[int, str]]:
    """Non-topological map with two boundary inputs, and a hat2 flow on it
    that holds locally but not globally."""
    coords = {"root": (0, -1), "var": (0, 1), "var2": (1, 0), "p": (0, -0.33),
              "q": (0.5, -0.33), "r": (0, 0.33)}
    edges = [("var", "r"), ("r", "p"), ("p", "root"), ("p", "q"),
             ("q", "q", {"out": 0, "in": 60}), ("var2", "r")]
    M, O, pos = map_from_drawing(coords, edges, "root", boundary_nodes=["root", "var", "var2"])
    values = [1, 1, 0, 2, 0, 1]
    return M, O, {pos[k] & ~1: str(x) for k, x in enumerate(values)}


def nonglobal_second() -> tuple[RootedMap, Orientation, dict[int, str]]:
    """Closed-boundary non-topological map with a non-global hat2 flow."""
    coords = {"root": (0, -1.5), "a1": (0, -1), "l2": (0.5, -0.5), "l3": (-0.5, -0.5),
              "a4": (0, 0), "l5": (0, 0.5), "l6": (-0.6, 0.8), "a7": (0.6, 0.8)}
    edges = [("l3", "a1", _BEND_R), ("l2", "a1", _BEND_L), ("a1", "root"), ("a4", "l2", _BEND_L),
             ("l3", "a4", _BEND_L), ("l5", "a4"), ("l6", "l3", _BEND_R), ("l2", "a7", _BEND_R),
             ("a7", "l6", _BEND_R), ("l6", "l5", _BEND_R), ("l5", "a7", _BEND_R)]
    M, O, pos = map_from_drawing(coords, edges, "root")
    values = [2, 0, 0, 0, 2, 0, 2, 2, 2, 0, 2]
    return M, O, {pos[k] & ~1: str(x) for k, x in enumerate(values)}


TERMS = {
    "I": r"\x.x",
    "B": r"\x.\y.\z.x (y z)",
    "C": r"\x.\y.\z.(x z) y",
    "bubble": "context: x\n\\y.x y",
    "xy": "context: x y\nx y",
    "redex": r"\y.(\x.x) y",
}


def term(name: str) -> LinearTerm:
    return parse(TERMS[name])


def term_map(name: str) -> tuple[RootedMap, Orientation]:
    return term_to_map(term(name))


@lru_cache(maxsize=None)
def appendix_b() -> dict:
    return load_json("appendix_b.json")


def appendix_b_term() -> LinearTerm:
    return parse(appendix_b()["term"])


def appendix_b_assignment() -> dict[str, str]:
    """Generator letter -> Klein element, as printed."""
    data = appendix_b()
    return {ch: data["colors"][c] for c, letters in data["assignment"].items() for ch in letters}


def tutte_closed() -> RootedMap:
    """The closed Tutte graph: the bundled example term map with its boundary closed up."""
    M, _ = term_to_map(appendix_b_term())
    return close_map(M)


def closed_term_map(name: str) -> RootedMap:
    M, _ = term_map(name)
    return close_map(M)
