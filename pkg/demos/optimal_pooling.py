"""Cost-optimal pool sizes by dynamic programming.

For a batch of n specimens, every way of splitting it into disjoint pools
is an integer partition of n, and the expected number of tests is additive
over pools.  dp_solve finds the cheapest partition; here we sweep
prevalence and watch the optimal size shrink.
"""

from poolpart import (
    MultiplicityFunction,
    cost_vector,
    dorfman_infinite_size,
    dp_solve,
    efficiency,
    iid_model,
    pooling_from_multiplicity,
    q_from_alpha,
)

n = 80

print(f"{'prevalence':>10}  {'partition':>16}  {'E[tests]':>8}  {'efficiency':>10}  {'classical s*':>12}")
for p in (0.005, 0.01, 0.01624, 0.03, 0.06, 0.12, 0.25):
    cv = cost_vector(q_from_alpha(iid_model(n, p)))
    mu, table = dp_solve(cv, n)
    tests = table.values[n]
    label = " + ".join(f"{m}x{i}" for i, m in sorted(mu.counts, reverse=True))
    s_inf = dorfman_infinite_size(p)
    print(f"{p:>10.3%}  {label:>16}  {tests:8.3f}  {efficiency(n, tests):10.3f}  {s_inf:>12}")

# the partition materializes as concrete index pools, larger pools first
mu, _ = dp_solve(cost_vector(q_from_alpha(iid_model(n, 0.01624))), n)
pools = pooling_from_multiplicity(mu, range(n))
print("\npools at 1.624%:", pools.sizes)

# a fixed menu also works: restrict the cost vector and the DP adapts
cv6 = cost_vector(q_from_alpha(iid_model(n, 0.01624)), max_size=6)
mu6, table6 = dp_solve(cv6, n)
print("capped at 6:", dict(mu6.counts), "E[tests] =", round(table6.values[n], 3))

# any hand-rolled multiplicity can be priced the same way
team8 = MultiplicityFunction(n, {8: 10})
print("ten pools of 8 cost",
      round(sum(cost_vector(q_from_alpha(iid_model(n, 0.01624))).c[8] for _ in range(10)), 3))
