"""Show that the additive preconditioner is insensitive to sliver cells.

A triangle grid is cut by the line y = 1/2 + eps. As eps shrinks, the cut
cells become arbitrarily thin. The matrix condition number blows up, but
kappa(B A) and the GMRES iteration count barely move.

    python3 demos/cut_mesh_robustness.py
"""
from vemasp import (aspect_ratio, assemble_projection_system, build_additive, condition_number,
                    cut_with_line, generate_triangle_grid, get_field, gmres)


def main() -> None:
    grid = generate_triangle_grid(8)
    f = get_field("f2")
    print(f"{'eps':>8} {'alpha':>10} {'kappa(A)':>10} {'kappa(BA)':>10} {'iters':>6}")
    for eps in (1e-2, 1e-4, 1e-6):
        mesh = cut_with_line(grid, 0.5 + eps)
        system = assemble_projection_system(mesh, f)
        A = system.matrix
        B = build_additive(A, mesh)
        res = gmres(A, system.rhs, B)
        print(f"{eps:>8.0e} {aspect_ratio(mesh):>10.3g} {condition_number(A).value:>10.3g} "
              f"{condition_number(A, B).value:>10.3f} {res.iterations:>6}")


if __name__ == "__main__":
    main()
