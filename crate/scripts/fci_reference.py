"""Print FCI ground energies (total, including nuclear repulsion) for data/*.fcidump."""
import glob
import json
import os

from pyscf import fci
from pyscf.tools import fcidump

out = {}
for path in sorted(glob.glob("data/*.fcidump")):
    d = fcidump.read(path)
    norb, nelec = d["NORB"], d["NELEC"]
    solver = fci.direct_spin1.FCI()
    solver.conv_tol = 1e-13
    e, _ = solver.kernel(d["H1"], d["H2"], norb, (nelec // 2, nelec - nelec // 2), ecore=d["ECORE"])
    out[os.path.basename(path).split(".")[0]] = e
print(json.dumps(out, indent=2))
