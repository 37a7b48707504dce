"""Build the four integral operators for a smooth state and differentiate them back.

Differentiating I_k once in t and twice in each of x, y, z should give the
Navier-Stokes residual r_k of the same state.  On a grid the two agree only
up to O(h^2), and this script shows the error dropping by about 4 each time
the grid is halved.  It then shows why low-degree polynomials do not close
the gap exactly: a second difference of a twice trapezoid-integrated
function returns (f[i-1] + 2 f[i] + f[i+1]) / 4 rather than f[i].
"""
import numpy as np

from nslab import FlowState, assemble_I, make_uniform_grid
from nslab.operators import lemma32_discrepancy
from nslab.oracle import polynomial_fields, smooth_fields


def grid(n):
    return make_uniform_grid((0, 1), (0, 1), (0, 1), (0, 1), n, n, n, n)


print("smooth state, anchor at the origin")
prev = None
for n in (9, 17, 33):
    s = FlowState.from_functions(grid(n), *smooth_fields(0))
    d = max(lemma32_discrepancy(s, s, (0, 0, 0)))
    ratio = "" if prev is None else f"  ratio {prev / d:.2f}"
    print(f"  n={n:3d}  max|D_k - r_k| = {d:.3e}{ratio}")
    prev = d

s = FlowState.from_functions(grid(8), *polynomial_fields(0))
out = assemble_I(s, s, (0, 0, 0))
print("\npolynomial state on 8^4")
print("  sup|I_k|          :", ", ".join(f"{x:.3e}" for x in out.sup_norms()))
print("  max|D_k - r_k|    :", ", ".join(f"{x:.3e}" for x in lemma32_discrepancy(s, s, (0, 0, 0))))

# the one-dimensional mechanism behind the polynomial gap
x = np.linspace(0, 1, 8)
h = x[1] - x[0]
f = x**2
F = np.concatenate([[0], np.cumsum(0.5 * h * (f[1:] + f[:-1]))])
FF = np.concatenate([[0], np.cumsum(0.5 * h * (F[1:] + F[:-1]))])
d2 = (FF[2:] - 2 * FF[1:-1] + FF[:-2]) / h**2
print("\nf = x^2: interior second difference of the double trapezoid integral minus f")
print("  ", np.round(d2 - f[1:-1], 6), " vs h^2 f''/4 =", round(h**2 * 2 / 4, 6))
