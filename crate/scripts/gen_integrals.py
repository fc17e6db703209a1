"""Generate STO-3G FCIDUMP files for the benchmark molecule set.

Geometries: bond length 1 Angstrom throughout; linear hydrogen chains;
linear BeH2; water with a 107.6 degree bond angle. Canonical RHF orbitals.

    python3 scripts/gen_integrals.py data/
"""
import math
import os
import sys

from pyscf import gto, scf
from pyscf.tools import fcidump

R = 1.0


def chain(n):
    return [("H", (0.0, 0.0, i * R)) for i in range(n)]


def water():
    half = math.radians(107.6) / 2.0
    return [
        ("O", (0.0, 0.0, 0.0)),
        ("H", (R * math.sin(half), 0.0, R * math.cos(half))),
        ("H", (-R * math.sin(half), 0.0, R * math.cos(half))),
    ]


MOLECULES = {
    "h2": (chain(2), 0),
    "h3p": (chain(3), 1),
    "h4": (chain(4), 0),
    "hf": ([("H", (0.0, 0.0, 0.0)), ("F", (0.0, 0.0, R))], 0),
    "lih": ([("Li", (0.0, 0.0, 0.0)), ("H", (0.0, 0.0, R))], 0),
    "h6": (chain(6), 0),
    "beh2": ([("H", (0.0, 0.0, -R)), ("Be", (0.0, 0.0, 0.0)), ("H", (0.0, 0.0, R))], 0),
    "h2o": (water(), 0),
}


def main(out_dir):
    os.makedirs(out_dir, exist_ok=True)
    for name, (atoms, charge) in MOLECULES.items():
        mol = gto.M(atom=atoms, basis="sto-3g", charge=charge, spin=0, unit="Angstrom", verbose=0)
        mf = scf.RHF(mol)
        mf.conv_tol = 1e-12
        mf.kernel()
        path = os.path.join(out_dir, f"{name}.fcidump")
        fcidump.from_scf(mf, path, tol=1e-14)
        print(f"{name}: norb={mol.nao} nelec={mol.nelectron} e_hf={mf.e_tot:.10f}")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "data")
