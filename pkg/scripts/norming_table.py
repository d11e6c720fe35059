"""Table of a_t from bisection next to the closed forms.

For Pareto(alpha < 2) the closed form is t^(1/alpha); for alpha = 2 it is
the larger root of s^2 = 2 t ln s.
"""

import math

from scipy.optimize import brentq

from drwalk.waiting import WaitingTimeModel, norming


def closed_form(alpha, t):
    if alpha < 2:
        return t ** (1 / alpha)
    return brentq(lambda s: s * s - 2 * t * math.log(s), math.sqrt(t), t)


def main():
    print(f"{'alpha':>6} {'t':>9} {'a_t':>16} {'closed form':>16} {'rel err':>10}")
    for alpha in (0.5, 1.2, 1.5, 1.9, 2.0):
        m = WaitingTimeModel.pareto(alpha)
        for t in (1e3, 1e4, 1e5, 1e6):
            a, c = norming(m, t), closed_form(alpha, t)
            print(f"{alpha:6.2f} {t:9.0e} {a:16.6f} {c:16.6f} {abs(a / c - 1):10.2e}")


if __name__ == "__main__":
    main()
