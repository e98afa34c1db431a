"""Every n >= 10 with n % 4 != 1 is p**2 + k with p prime and k square-free.

``verifier`` checks concrete ranges with a segmented square-free sieve;
``analytic`` evaluates the explicit lower bound that covers n >= 2.5e14.
"""

from .analytic import BoundBreakdown, BoundParams, find_threshold, r_lower
from .prime_tools import (
    PrimeTable,
    is_prime_u64,
    is_squarefree_exact,
    omega_distinct,
    primes_up_to,
)
from .sieve import SieveSegment, sieve_squarefree
from .verifier import (
    FailureRecord,
    VerifierConfig,
    recheck_failures,
    run_range,
    smallest_representing_prime,
    verify_window,
)

__version__ = "0.1.0"
