"""Regenerate the committed FCIDUMP fixtures and their JSON sidecars.

Requires pyscf. Integrals are written in the active space (frozen core already
folded into the core energy), chemist notation, 8-fold symmetry.
"""
import json
import os

import numpy as np
from pyscf import ao2mo, gto, mcscf, scf
from pyscf.tools import fcidump

HERE = os.path.dirname(os.path.abspath(__file__))

FIXTURES = [
    # name, atom spec, bond length (A), frozen spatial orbitals, active spatial orbitals
    ("h2_0.735", "H 0 0 0; H 0 0 {r}", 0.735, 0, 2),
    ("lih_1.547", "Li 0 0 0; H 0 0 {r}", 1.547, 1, 5),
    ("lih_2.4", "Li 0 0 0; H 0 0 {r}", 2.4, 1, 5),
    ("n2_1.09", "N 0 0 0; N 0 0 {r}", 1.09, 2, 7),
]


def build(name, atom, r, nfrozen, ncas):
    mol = gto.M(atom=atom.format(r=r), basis="sto-3g", unit="Angstrom", verbose=0)
    mf = scf.RHF(mol)
    mf.conv_tol = 1e-12
    mf.kernel()
    nelecas = mol.nelectron - 2 * nfrozen
    mc = mcscf.CASCI(mf, ncas, nelecas)
    mc.ncore = nfrozen
    mc.fcisolver.conv_tol = 1e-12
    mc.kernel()
    h1, ecore = mc.get_h1eff()
    h2 = ao2mo.restore(8, mc.get_h2eff(), ncas)
    path = os.path.join(HERE, name + ".fcidump")
    fcidump.from_integrals(path, h1, h2, ncas, nelecas, nuc=ecore, ms=0, tol=1e-14)
    frozen = list(range(nfrozen))
    dropped = list(range(nfrozen + ncas, mol.nao))
    meta = {
        "name": name,
        "basis": "sto-3g",
        "geometry": atom.format(r=r),
        "bond_length_angstrom": r,
        "n_qubits": 2 * ncas,
        "n_electrons": nelecas,
        "hf_energy": float(mf.e_tot),
        "fci_energy": float(mc.e_tot),
        "frozen_spatial_orbitals": frozen,
        "dropped_virtual_orbitals": dropped,
        "frozen_note": (
            f"{len(frozen)} lowest spatial orbitals frozen (doubly occupied) and "
            f"{len(dropped)} highest virtual(s) dropped; active space "
            f"{ncas} spatial orbitals / {nelecas} electrons"
        ),
    }
    with open(os.path.join(HERE, name + ".json"), "w") as fh:
        json.dump(meta, fh, indent=2)
        fh.write("\n")
    print(name, meta["hf_energy"], meta["fci_energy"])


if __name__ == "__main__":
    for fx in FIXTURES:
        build(*fx)
