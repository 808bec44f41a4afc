"""Block-by-block Besov norms of the oscillating datum for huge N.

Each cosine of u_{0,N} sits in a single dyadic shell, so the norm reduces to
a weighted l^q sum that can be evaluated for N far beyond any grid.  With
q = 6 the norm shrinks as N grows.  With q = 3 the sum of eta_k^3 grows like
log N, but eps_N = 1 / log log N decays faster at first, so the q = 3
column bottoms out near N = 1e12 and only then starts to grow.
"""

from cubicheat import BumpSpec, Grid
from cubicheat.data import ShellModel

model = ShellModel(BumpSpec(), Grid(3, 64), 9.0)
print(f"{'N':>8} {'q = 6':>10} {'q = 3':>10}")
for e in (2, 3, 4, 5, 9, 12, 20, 40, 100):
    N = 10**e
    print(f"{'1e%d' % e:>8} {model.norm(N, -2 / 3, 6):10.4f} {model.norm(N, -2 / 3, 3):10.4f}")
