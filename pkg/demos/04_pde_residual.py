"""Finite-difference verification of the third-order nonlinear PDE for the
log gap probability of the Pearcey process.

At the true surface the assembled residual is pure stencil truncation and
shrinks by a factor of ~4 when the grid is halved; a 1% corruption of the
surface destroys that contraction. Both behaviors are demonstrated.
"""

import pathlib

from pearceylab.pde_lab import (pearcey_pde_residual, q_surface,
                                residual_csv_lines, wronskian_coefficient)

OUT = pathlib.Path(__file__).parent / "out"
OUT.mkdir(exist_ok=True)

for tc in (-0.5, 0.0, 0.5):
    res = []
    for h, m in ((0.05, 48), (0.025, 48)):
        surf = q_surface((tc - 2 * h, tc + 2 * h), 0.0, 1.0, h, h, m=m)
        rep = pearcey_pde_residual(surf)
        res.append(rep)
    (OUT / f"pde_residual_t{tc:+.1f}.csv").write_text(
        "\n".join(residual_csv_lines(res[1])) + "\n")
    print(f"t = {tc:+.1f}: residual {res[0].max_abs:.3e} -> {res[1].max_abs:.3e} "
          f"(contraction {res[0].max_abs / res[1].max_abs:.2f})")

surf = q_surface((-0.1, 0.1), 0.0, 1.0, 0.05, 0.05, m=48)
surf2 = q_surface((-0.05, 0.05), 0.0, 1.0, 0.025, 0.025, m=48)
bad = (pearcey_pde_residual(surf.scaled(1.01)).max_abs
       / pearcey_pde_residual(surf2.scaled(1.01)).max_abs)
print(f"corrupted surface (x1.01): contraction {bad:.2f} (no contraction)")

w = wronskian_coefficient(0.0, 0.0)
print(f"Wronskian coefficient 2pq(pq)'' - 3(p'q')'(p'q''-p''q') at (0,0): {w:.6f}")
