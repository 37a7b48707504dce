"""March three cells over two unit intervals and collect every audit.

Each cell is solved independently.  Interval 2 starts from the final slice
of interval 1 (velocity and pressure), so the value rows of the interface
audit are exactly zero; the time-derivative rows measure how far the two
intervals disagree.  The L2 ledger sums the per-cell integrals and compares
them with 1/2 + 1/4 + 1/8.
"""
from nslab import bump_initial_data, compute_N, make_partition, march, select_epsilon, theorem11_audit
from nslab.march import SolverConfig, global_l2_ledger, interface_audit

cells = make_partition(3)
config = SolverConfig(n=8, max_iter=100)
trajs, data, budgets = [], [], []
for c in cells:
    fields, cert = bump_initial_data(c, c.grid(8), 1e-3)
    b = select_epsilon(c.M, compute_N(*fields), c.mu)
    trajs.append(march(c, *fields, 2, b, config))
    data.append((fields, cert))
    budgets.append(b)

ia = interface_audit(trajs[0])
print("cell 1 interface at t = 1 (largest rows):")
for c in sorted(ia.checks, key=lambda c: -c.value)[:5]:
    print(f"  {c.name:12s} {c.value:.3e}")

print("\nL2 ledger")
for t in (0.0, 1.0, 2.0):
    e = global_l2_ledger(cells, trajs, t)
    print(f"  t={t:.0f}  total u {e.totals['u']:.4e}  total p {e.totals['p']:.4e}  bound {e.bound}")

master = theorem11_audit(cells, trajs, data, budgets)
print(f"\nmaster audit: {master.status}")
for s in master.sections:
    print(f"  {s.name:16s} {s.status}")
