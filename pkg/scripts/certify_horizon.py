"""Sweep the fixture lattice at full resolution and record its free-path bound.

Writes the ``[lattice]`` table of ``src/lorentz_holes/data/fixture.toml``,
leaving the other sections of the file untouched.
"""

import argparse
import time

import tomli
import tomli_w

from lorentz_holes import constants as C
from lorentz_holes.billiard_core import (
    FIXTURE_PATH,
    BoundaryMode,
    Disk,
    ScattererLattice,
    lattice_to_dict,
    validate_finite_horizon,
    validate_symmetry,
)

FIXTURE_DISKS = (Disk((0.0, 0.0), 0.2), Disk((0.5, 0.5), 0.4))


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--directions", type=int, default=C.HORIZON_DIRECTIONS)
    parser.add_argument("--offsets", type=int, default=C.HORIZON_OFFSETS)
    args = parser.parse_args()

    lattice = ScattererLattice(FIXTURE_DISKS, BoundaryMode.VERTICAL_TORUS)
    lattice.validate()
    if not validate_symmetry(lattice):
        raise SystemExit("fixture is not mirror symmetric")
    start = time.perf_counter()
    bound = validate_finite_horizon(lattice, args.directions, args.offsets)
    elapsed = time.perf_counter() - start
    print(f"max free path bound {bound:.9f} ({args.directions}x{args.offsets} sweep, {elapsed:.1f}s)")

    doc = {}
    if FIXTURE_PATH.exists():
        with open(FIXTURE_PATH, "rb") as fh:
            doc = tomli.load(fh)
    lattice_table = lattice_to_dict(lattice)
    lattice_table["max_free_path"] = round(bound, 9)
    lattice_table["certificate"] = {
        "directions": args.directions,
        "offsets": args.offsets,
        "safety": C.HORIZON_SAFETY,
        "symmetric": True,
    }
    doc["lattice"] = lattice_table
    FIXTURE_PATH.parent.mkdir(parents=True, exist_ok=True)
    with open(FIXTURE_PATH, "wb") as fh:
        tomli_w.dump(doc, fh)
    print(f"wrote {FIXTURE_PATH}")


if __name__ == "__main__":
    main()
