"""B-spline bases on a uniform extended grid.

Builds a cubic grid with five intervals on [-1, 1], prints the knot vector,
then checks what the KAN layer relies on. The bases sum to one everywhere
in the domain and each is nonzero on at most k+1 intervals. Derivatives are
compared against a central difference.
"""

import numpy as np

from tskanmixer.spline import basis_derivatives, basis_values, make_grid

grid = make_grid(-1.0, 1.0, G=5, k=3)
print(f"G={grid.G} k={grid.k}: {len(grid.knots)} knots, {grid.n_basis} basis functions")
print("knots:", np.round(grid.knots, 3))

x = np.linspace(-1, 1, 9)
B = basis_values(grid, x)
print("\nbasis values at 9 points (rows = x, columns = basis index)")
for xi, row in zip(x, B):
    print(f"  x={xi:+.2f}  " + " ".join(f"{v:5.3f}" for v in row) + f"   sum={row.sum():.15f}")

# at a knot, a cubic basis takes the familiar 1/6, 2/3, 1/6 pattern
print("\nat the knot x=-0.2:", np.round(basis_values(grid, -0.2), 6))

h = 1e-6
xs = np.array([-0.73, 0.05, 0.51])
fd = (basis_values(grid, xs + h) - basis_values(grid, xs - h)) / (2 * h)
print("max |analytic - finite difference| derivative:", np.abs(basis_derivatives(grid, xs) - fd).max())

# inputs outside the domain are clamped, so the bases freeze at the edges
print("x=-5 and x=-1 agree:", np.array_equal(basis_values(grid, -5.0), basis_values(grid, -1.0)))
