"""Solve the H(div) projection problem on diamond meshes of growing size.

Runs GMRES with no preconditioner and with the additive and multiplicative
auxiliary-space preconditioners. The unpreconditioned iteration count roughly
doubles with each refinement, while the preconditioned counts stay flat.

    python3 demos/projection_solve.py
"""
from vemasp import (assemble_projection_system, build_additive, build_multiplicative,
                    generate_diamond, get_field, gmres)


def main() -> None:
    f = get_field("f1")
    print(f"{'N':>4} {'facets':>7} {'none':>6} {'add':>5} {'mult':>5}")
    for N in (4, 8, 16):
        mesh = generate_diamond(N)
        system = assemble_projection_system(mesh, f)
        A, b = system.matrix, system.rhs
        counts = [gmres(A, b).iterations]
        for build in (build_additive, build_multiplicative):
            counts.append(gmres(A, b, build(A, mesh)).iterations)
        print(f"{N:>4} {A.shape[0]:>7} " + " ".join(f"{c:>5}" for c in counts))


if __name__ == "__main__":
    main()
