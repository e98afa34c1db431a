"""Explicit lower bound for the weighted count R(n) of primes p < sqrt(n)
with n - p**2 square-free.

R(n) is bounded below by theta(sqrt n) minus four contributions, one per
range of the odd prime q whose square might divide n - p**2:

    cont1   q <= 97            explicit theta(x; q**2, l) error constants
    cont2   97 < q <= n**c     Brun-Titchmarsh
    cont3   n**c < q < A sqrt n   trivial residue count + Dusart's pi bound
    cont4   A sqrt n <= q       counting solutions of n = p**2 + B q**2

All logarithms are natural.  The error constants for q <= 97 are data,
stored as exact decimal strings; bound arithmetic is done in binary floats.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from decimal import ROUND_CEILING, Decimal
from functools import lru_cache
from typing import Iterable, Optional, Sequence

from .prime_tools import is_prime_u64, omega_distinct, primes_up_to

# relative error constant for theta(x; q**2, l), valid for x >= 1e10
EPSILON_1E10 = {
    3: "0.003228", 5: "0.012214", 7: "0.017015", 11: "0.031939",
    13: "0.042497", 17: "0.14271", 19: "0.17641", 23: "0.25779",
    29: "0.41474", 31: "0.47695", 37: "0.69397", 41: "0.86446",
    43: "0.95757", 47: "1.15923", 53: "1.50179", 59: "1.89334",
    61: "2.03488", 67: "2.49293", 71: "2.82639", 73: "3.00162",
    79: "3.56158", 83: "3.96363", 89: "4.61023", 97: "5.55434",
}

# sqrt(x)-scaled error constant, valid for x <= 1e10; q >= 17 use the closed form.
# The 5**2 entry is the corrected value.
OMEGA_1E10_SMALL = {
    3: "1.109042", 5: "0.821891", 7: "0.744132", 11: "0.711433", 13: "0.718525",
}

# Published values of the combined constant at T = sqrt(2.5e14).
EPSILON_T_PUBLISHED = {
    3: "0.00323", 5: "0.01222", 7: "0.01702", 11: "0.03194",
    13: "0.04250", 17: "0.14271", 19: "0.17641", 23: "0.25779",
    29: "0.41474", 31: "0.47695", 37: "0.69397", 41: "0.86446",
    43: "0.95757", 47: "1.15923", 53: "1.50179", 59: "1.89334",
    61: "2.03488", 67: "2.49293", 71: "2.82639", 73: "3.00162",
    79: "3.56158", 83: "3.96363", 89: "4.61023", 97: "5.55434",
}

SMALL_MODULI = tuple(EPSILON_1E10)
DUSART_PI = 1.2762
DUSART_THETA = 0.2
DUSART_THETA_FROM = 3_594_641
ROBIN_OMEGA = 1.3841
THETA_SQRT_FLOOR = 10**14
CERTIFIED_FROM = 2.5e14
TAIL_PRIME_LIMIT = 1_000_001


class NoCrossoverError(ValueError):
    """r_lower is negative at every grid point."""


@dataclass(frozen=True)
class BoundParams:
    c: float = 0.209
    A: float = 0.0685
    T: float = math.sqrt(2.5e14)

    def __post_init__(self):
        if not 0 < self.c < 0.25:
            raise ValueError(f"c must lie in (0, 1/4), got {self.c}")
        if not 0 < self.A < 1:
            raise ValueError(f"A must lie in (0, 1), got {self.A}")
        if not self.T > 0:
            raise ValueError(f"T must be positive, got {self.T}")


@dataclass(frozen=True)
class EpsilonEntry:
    q: int
    eps_1e10: float
    omega_1e10: float
    eps_T: Decimal
    branch: str  # "eps" or "omega": which side of the max won


@dataclass(frozen=True)
class BoundBreakdown:
    n: float
    cont1: float
    cont2: float
    cont3: float
    cont4: float
    theta_lower: float
    r_lower: float
    certified: bool  # every constant used is valid at this n

    def lines(self) -> list[tuple[str, float]]:
        return [
            ("n", self.n),
            ("cont1", self.cont1),
            ("cont2", self.cont2),
            ("cont3", self.cont3),
            ("cont4", self.cont4),
            ("theta_lower", self.theta_lower),
            ("r_lower", self.r_lower),
        ]


@dataclass(frozen=True)
class Threshold:
    value: int
    status: str  # "crossover" or "positive_throughout"
    grid_points: int


def _check_small_modulus(q: int) -> None:
    if q not in EPSILON_1E10:
        raise ValueError(f"q = {q} is not an odd prime <= 97")


def euler_phi_prime_square(q: int) -> int:
    if q < 2 or not is_prime_u64(q):
        raise ValueError(f"{q} is not prime")
    return q * (q - 1)


def epsilon_1e10(q: int) -> float:
    _check_small_modulus(q)
    return float(EPSILON_1E10[q])


def omega_1e10(q: int) -> float:
    _check_small_modulus(q)
    if q in OMEGA_1E10_SMALL:
        return float(OMEGA_1E10_SMALL[q])
    # the worst case for 17 <= q <= 97 sits at x = 7, residue 7
    return (math.log(7) - 7 / euler_phi_prime_square(q)) / math.sqrt(7)


def _omega_branch(q: int, params: BoundParams) -> float:
    return omega_1e10(q) * euler_phi_prime_square(q) / math.sqrt(params.T)


def epsilon_T(q: int, params: BoundParams = BoundParams()) -> float:
    """Unrounded error constant for theta(x; q**2, l), x >= T."""
    return max(epsilon_1e10(q), _omega_branch(q, params))


def epsilon_T_rounded(q: int, params: BoundParams = BoundParams()) -> Decimal:
    """epsilon_T rounded up at the fifth decimal, as published."""
    eps = Decimal(EPSILON_1E10[q])
    om = _omega_branch(q, params)
    value = eps if eps >= Decimal(om) else Decimal(om)
    return value.quantize(Decimal("0.00001"), rounding=ROUND_CEILING)


def epsilon_entries(params: BoundParams = BoundParams()) -> list[EpsilonEntry]:
    out = []
    for q in SMALL_MODULI:
        eps, om = epsilon_1e10(q), _omega_branch(q, params)
        out.append(
            EpsilonEntry(
                q=q,
                eps_1e10=eps,
                omega_1e10=omega_1e10(q),
                eps_T=epsilon_T_rounded(q, params),
                branch="eps" if eps >= om else "omega",
            )
        )
    return out


def cont1_coefficient(params: BoundParams = BoundParams(), moduli: Iterable[int] = SMALL_MODULI) -> float:
    """Coefficient of sqrt(n) in the q <= 97 contribution."""
    return math.fsum(2 * (1 + epsilon_T(q, params)) / euler_phi_prime_square(q) for q in moduli)


@lru_cache(maxsize=1)
def prime_tail_constant() -> float:
    """sum over primes 97 < q < 1000001 of 1/(q(q-1)), plus 1/1000000."""
    qs = primes_up_to(TAIL_PRIME_LIMIT - 1).primes
    qs = qs[qs > 97].tolist()
    return math.fsum(1.0 / (q * (q - 1)) for q in qs) + 1e-6


def brun_titchmarsh_bound(n: float, c: float, moduli: Iterable[int]) -> float:
    """sqrt(n)/(1/4 - c) * sum 1/(q(q-1)) over the given q (all q <= n**c)."""
    if not c < 0.25:
        raise ValueError("c must be < 1/4")
    return math.sqrt(n) / (0.25 - c) * math.fsum(1.0 / (q * (q - 1)) for q in moduli)


def cont2(n: float, params: BoundParams = BoundParams()) -> float:
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    return prime_tail_constant() * math.sqrt(n) / (0.25 - params.c)


def dusart_pi_upper(x: float) -> float:
    """Upper bound x/log x * (1 + 1.2762/log x) for pi(x)."""
    lx = math.log(x)
    return x / lx * (1 + DUSART_PI / lx)


def dusart_theta_lower(x: float) -> float:
    """theta(x) >= x - 0.2 x / log(x)**2, valid for x >= 3 594 641."""
    return x - DUSART_THETA * x / math.log(x) ** 2


def robin_omega_bound(n: float) -> float:
    ln = math.log(n)
    return ROBIN_OMEGA * ln / math.log(ln)


def cont3(n: float, params: BoundParams = BoundParams()) -> float:
    x = params.A * math.sqrt(n)
    if x <= math.e:
        raise ValueError(f"A*sqrt(n) = {x} must exceed e")
    s, ln = math.sqrt(n), math.log(n)
    tail = s * (n ** (-2 * params.c) + n ** (-params.c)) * ln
    return tail + dusart_pi_upper(x) * ln


def cont4(n: float, params: BoundParams = BoundParams()) -> float:
    if n <= math.exp(math.e):
        raise ValueError(f"n = {n} must exceed e**e")
    a2 = params.A * params.A
    ln = math.log(n)
    return 2 ** robin_omega_bound(n) * (1.5 + 1 / (48 * a2) + 9 / (2 * a2 * n)) * ln


def theta_sqrt_lower(n: float) -> float:
    """Lower bound for theta(sqrt n), valid for n >= 1e14."""
    if n < THETA_SQRT_FLOOR:
        raise ValueError(f"n = {n} is below the validity floor 1e14")
    return math.sqrt(n) * (1 - 4 * DUSART_THETA / math.log(n) ** 2)


def r_lower(n: float, params: BoundParams = BoundParams()) -> BoundBreakdown:
    """Assemble the lower bound for R(n).

    Evaluates for any n >= 1e14; ``certified`` is set only once sqrt(n) >= T,
    where the q <= 97 constants apply.
    """
    theta = theta_sqrt_lower(n)
    c1 = cont1_coefficient(params) * math.sqrt(n)
    c2, c3, c4 = cont2(n, params), cont3(n, params), cont4(n, params)
    return BoundBreakdown(
        n=n,
        cont1=c1,
        cont2=c2,
        cont3=c3,
        cont4=c4,
        theta_lower=theta,
        r_lower=theta - c1 - c2 - c3 - c4,
        certified=math.sqrt(n) >= params.T,
    )


def geometric_grid(lo: float, hi: float, ratio: float = 1.01) -> list[float]:
    pts, x = [], float(lo)
    while x < hi:
        pts.append(x)
        x *= ratio
    pts.append(float(hi))
    return pts


def find_threshold(
    params: BoundParams = BoundParams(),
    n_max: float = 1e20,
    n_min: float = THETA_SQRT_FLOOR,
    ratio: float = 1.01,
    rel_width: float = 1e-6,
) -> Threshold:
    """Locate the last sign change of r_lower on a geometric grid.

    When r_lower is positive at every grid point the floor ``n_min`` is
    returned with status ``"positive_throughout"``; when it is never
    positive NoCrossoverError is raised.
    """
    if n_max < n_min:
        raise ValueError(f"n_max must be >= {n_min}")
    grid = geometric_grid(n_min, n_max, ratio)
    vals = [r_lower(n, params).r_lower for n in grid]
    neg = [i for i, v in enumerate(vals) if v <= 0]
    if not neg:
        return Threshold(int(math.ceil(n_min)), "positive_throughout", len(grid))
    k = neg[-1]
    if k == len(grid) - 1:
        raise NoCrossoverError(
            f"r_lower is not positive at n_max = {n_max:g}"
            + (" (negative throughout)" if len(neg) == len(grid) else "")
        )
    lo, hi = grid[k], grid[k + 1]
    while (hi - lo) > rel_width * hi:
        mid = math.sqrt(lo * hi)
        if r_lower(mid, params).r_lower > 0:
            hi = mid
        else:
            lo = mid
    bad = [grid[i] for i in range(k + 1, len(grid)) if not vals[i] > 0]
    assert not bad, f"r_lower not positive above the threshold at {bad[:3]}"
    return Threshold(int(math.ceil(hi)), "crossover", len(grid))


def parse_grid(text: str) -> list[float]:
    """``"lo:hi:step"`` -> inclusive list of floats, stepped in exact decimal."""
    try:
        lo, hi, step = (Decimal(part) for part in text.split(":"))
    except (ValueError, ArithmeticError):
        raise ValueError(f"grid must look like lo:hi:step, got {text!r}") from None
    if step <= 0 or hi < lo:
        raise ValueError(f"bad grid {text!r}")
    count = int((hi - lo) / step) + 1
    return [float(lo + i * step) for i in range(count)]


def optimize_params(
    n: float, c_grid: Sequence[float], A_grid: Sequence[float], T: Optional[float] = None
) -> BoundParams:
    """Grid point maximizing r_lower(n); ties go to smaller c, then smaller A."""
    if not c_grid or not A_grid:
        raise ValueError("empty parameter grid")
    best: Optional[tuple[BoundParams, float]] = None
    for c in sorted(c_grid):
        for A in sorted(A_grid):
            params = BoundParams(c, A) if T is None else BoundParams(c, A, T)
            b = r_lower(n, params)
            if best is None or b.r_lower > best[1]:
                best = (params, b.r_lower)
    return best[0]


def quadratic_form_solution_bound(n: int, B: int) -> int:
    """Ceiling on solutions of n = p**2 + B q**2 in positive integers.

    w * 2**(omega(n) - 2) proper solutions in the positive quadrant, with
    w = 4 automorphs when B = 1 and 2 otherwise, plus one improper solution.
    """
    if n < 3 or B < 1:
        raise ValueError("need n >= 3 and B >= 1")
    w = 4 if B == 1 else 2
    return w * 2 ** max(omega_distinct(n) - 2, 0) + 1
