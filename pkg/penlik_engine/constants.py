from fractions import Fraction
from typing import List, Tuple

DEFAULT_SCAD_A: float = 3.7  # conventional choice; any a > 2 is admissible

# AR(5) coefficients of the simulation model and the factorization of its
# characteristic polynomial, low-order coefficient first.
AR_COEFFICIENTS: Tuple[Fraction, ...] = (
    Fraction(11, 4),
    Fraction(-23, 6),
    Fraction(37, 12),
    Fraction(-13, 9),
    Fraction(1, 3),
)
AR_FACTORS: List[Tuple[Tuple[Fraction, ...], int]] = [
    ((Fraction(1), Fraction(-3, 4)), 1),
    ((Fraction(1), Fraction(-1), Fraction(2, 3)), 2),
]
AR_SIGNALS: int = 5

KNOT_LEVELS: Tuple[float, ...] = (2 / 7, 3 / 7, 4 / 7, 5 / 7, 6 / 7)
GAMMA_SETTINGS: Tuple[float, ...] = (1.0, 2.5)

SIGNIFICANT_DIGITS: int = 9
SEED_ENV_VAR: str = "PENLIK_SEED"
RNG_ALGORITHM: str = "numpy.random.PCG64 via SeedSequence.spawn"

EXIT_OK: int = 0
EXIT_INPUT: int = 1
EXIT_NUMERIC: int = 2
