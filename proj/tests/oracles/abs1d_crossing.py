# Independent computation of the 20-step abs1d crossing used in the index tests.
# f(x) = |x|; the only non-open stratum is {0}. A step k belongs to I_C when the
# segment [x_k, x_{k+1}] comes within c * alpha_k**gamma of 0.
import math

x0 = 0.9
alphas = [0.5, 0.3, 1.5, 0.1, 0.1, 0.1, 0.1, 0.8, 0.3, 0.2,
          0.2, 0.05, 0.03, 0.9, 0.05, 0.05, 0.3, 0.1, 0.05, 0.05]
c, gamma = 0.5, 0.7425  # point-stratum constants shipped with abs1d

xs = [x0]
for a in alphas:
    x = xs[-1]
    v = 0.0 if 2 * abs(x) <= 1e-9 else math.copysign(1.0, x)
    xs.append(x - a * v)

ic = []
for k, a in enumerate(alphas):
    p, q = xs[k], xs[k + 1]
    d = 0.0 if p * q <= 0 else min(abs(p), abs(q))
    if d <= c * a ** gamma:
        ic.append(k)

print("x =", [round(x, 6) for x in xs])
print("IC =", ic)
