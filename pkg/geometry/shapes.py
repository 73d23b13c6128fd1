#!/usr/bin/env python
"""
Reference polytopes used by the tests and the command line.

This script will:
1. Build the unit cube, the reference tetrahedron and the L-shaped prism
2. Save each one to geometry/data/<name>.json in the polytope file format
"""

import json
import os
import sys
from typing import Callable, Dict, List

# Add the parent directory to sys.path to make imports work
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from geometry.polytope import Polytope, load_polytope

DATA_DIR = os.path.join(os.path.dirname(os.path.abspath(__file__)), "data")


def unit_cube() -> Polytope:
    """[0,1]^3; vertex 0 is the origin, edge 0 the x-axis edge and face 0 the face z=0."""
    vertices = [
        [0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0],
        [0, 0, 1], [1, 0, 1], [1, 1, 1], [0, 1, 1],
    ]
    faces = [
        [0, 3, 2, 1],  # z = 0
        [4, 5, 6, 7],  # z = 1
        [0, 1, 5, 4],  # y = 0
        [1, 2, 6, 5],  # x = 1
        [2, 3, 7, 6],  # y = 1
        [3, 0, 4, 7],  # x = 0
    ]
    return Polytope(vertices, faces, name="cube")


def reference_tetrahedron() -> Polytope:
    """conv{0, e1, e2, e3}."""
    vertices = [[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1]]
    faces = [[0, 2, 1], [0, 1, 3], [0, 3, 2], [1, 2, 3]]
    return Polytope(vertices, faces, name="tetrahedron")


def l_prism() -> Polytope:
    """
    L-shaped footprint (0,0),(2,0),(2,1),(1,1),(1,2),(0,2) extruded over [0,1].

    The reentrant edge runs from vertex 3 = (1,1,0) to vertex 9 = (1,1,1).
    """
    footprint = [[0, 0], [2, 0], [2, 1], [1, 1], [1, 2], [0, 2]]
    n = len(footprint)
    vertices = [[x, y, 0] for x, y in footprint] + [[x, y, 1] for x, y in footprint]
    faces: List[List[int]] = [list(reversed(range(n))), list(range(n, 2 * n))]
    for k in range(n):
        a, b = k, (k + 1) % n
        faces.append([a, b, b + n, a + n])
    return Polytope(vertices, faces, name="lprism")


BUILDERS: Dict[str, Callable[[], Polytope]] = {
    "cube": unit_cube,
    "tetrahedron": reference_tetrahedron,
    "lprism": l_prism,
}


def named_polytope(name_or_path: str) -> Polytope:
    """A built-in polytope by name, or a polytope file by path."""
    if name_or_path in BUILDERS:
        return BUILDERS[name_or_path]()
    return load_polytope(name_or_path)


def save_polytope(P: Polytope, filename: str) -> str:
    """Save a polytope to geometry/data/<filename>.json."""
    os.makedirs(DATA_DIR, exist_ok=True)
    file_path = os.path.join(DATA_DIR, f"{filename}.json")
    data = P.to_dict()
    with open(file_path, "w") as f:
        json.dump({"vertices": data["vertices"], "faces": data["faces"]}, f, indent=2)
    print(f"Saved {P!r} to {file_path}")
    return file_path


def main():
    """Write every reference polytope to the data directory."""
    for name, builder in BUILDERS.items():
        save_polytope(builder(), name)


if __name__ == "__main__":
    main()
