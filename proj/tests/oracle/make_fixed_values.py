"""Reference values for the fixed stats examples (scipy cross-checked with mpmath)."""
import mpmath
from scipy import stats

mpmath.mp.dps = 40

print("I_0.7(2,5) =", mpmath.nstr(mpmath.betainc(2, 5, 0, mpmath.mpf("0.7"), regularized=True), 20))
print("p(t=2.571, df=5) =", repr(2 * stats.t.sf(2.571, 5)))

xs = [2.1, 2.5, 1.9, 2.4, 2.3]
ys = [1.8, 2.0, 2.1, 1.9, 2.2]
r = stats.ttest_rel(xs, ys)
print("paired t =", repr(r.statistic), "p =", repr(r.pvalue))

xs = list(range(1, 21))
noise = [0.3, -0.5, 0.8, -0.2, 0.1, -0.9, 0.4, 0.6, -0.3, 0.2,
         -0.7, 0.5, -0.1, 0.9, -0.4, 0.0, 0.7, -0.6, 0.3, -0.8]
ys = [0.5 * x + 2.0 + e for x, e in zip(xs, noise)]
r = stats.pearsonr(xs, ys)
print("pearson r =", repr(r.statistic), "p =", repr(r.pvalue))
