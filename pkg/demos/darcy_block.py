"""Precondition the mixed Darcy saddle-point system with a block diagonal.

The velocity block uses the additive auxiliary-space preconditioner built on
M + div-div, and the pressure block uses the inverse cell areas. The Jacobi
reference preconditioner is shown for comparison.

    python3 demos/darcy_block.py
"""
from vemasp import (assemble_darcy, build_additive, build_darcy_block, build_diag_reference,
                    darcy_data, generate_diamond, gmres)
from vemasp.problems import assemble_projection


def main() -> None:
    f, g = darcy_data("f1")
    for N in (4, 8):
        mesh = generate_diamond(N)
        system = assemble_darcy(mesh, f, g)
        facet_block = build_additive(assemble_projection(mesh), mesh)
        block = build_darcy_block(facet_block, mesh)
        for name, B in (("diag", build_diag_reference(system)), ("block", block)):
            res = gmres(system.matrix, system.rhs, B)
            print(f"N={N:<3} {name:<6} iterations={res.iterations:<4} converged={res.converged}")


if __name__ == "__main__":
    main()
