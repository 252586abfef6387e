"""
Dimensional constants and exponent admissibility.

Holds the sphere measure, the critical Moser-Trudinger exponents and the
``ExponentConfig`` value object shared by every other module.
"""

import math
from dataclasses import dataclass

from ..utils.logging_setup import get_logger

logger = get_logger(__name__)

CRITICAL_TOLERANCE = 1e-12


class InvalidDimensionError(Exception):
    """Raised when the dimension is not an integer n >= 2."""
    pass


class ExponentRangeError(Exception):
    """Raised when an exponent or parameter lies outside its admissible range."""
    pass


class AdmissibilityError(Exception):
    """Raised when alpha/alpha_n + beta/n exceeds 1."""
    pass


def _check_dimension(n: int) -> int:
    if isinstance(n, bool) or int(n) != n or n < 2:
        raise InvalidDimensionError(f"Dimension must be an integer >= 2, got {n!r}")
    return int(n)


def _gamma_half_integer(n: int) -> float:
    """Gamma(n/2) by the half-integer recursion."""
    if n % 2 == 0:
        value = 1.0
        for k in range(1, n // 2):
            value *= k
        return value
    # Gamma(1/2) = sqrt(pi), Gamma(x + 1) = x Gamma(x)
    value = math.sqrt(math.pi)
    x = 0.5
    while x < n / 2.0:
        value *= x
        x += 1.0
    return value


def sphere_measure(n: int) -> float:
    """
    Surface measure of the unit sphere in R^n.

    Args:
        n: Dimension, at least 2.

    Returns:
        float: 2 pi^(n/2) / Gamma(n/2).

    Raises:
        InvalidDimensionError: If n < 2.
    """
    n = _check_dimension(n)
    return 2.0 * math.pi ** (n / 2.0) / _gamma_half_integer(n)


def ball_volume(n: int, radius: float = 1.0) -> float:
    """Lebesgue measure of the ball of the given radius in R^n."""
    return sphere_measure(n) * radius ** n / n


def harmonic_number(m: int) -> float:
    """1 + 1/2 + ... + 1/m (0 for m = 0)."""
    return sum(1.0 / k for k in range(1, m + 1))


def carleson_chang_level(n: int) -> float:
    """
    Closed-form concentration level e^(1 + 1/2 + ... + 1/(n-1)) |B_1|.

    Args:
        n: Dimension.

    Returns:
        float: The concentration level of the unweighted functional on the unit ball.
    """
    n = _check_dimension(n)
    return math.exp(harmonic_number(n - 1)) * ball_volume(n)


def _check_beta(n: int, beta: float) -> float:
    if not (0.0 <= beta < n):
        raise ExponentRangeError(f"beta must lie in [0, {n}), got {beta}")
    return float(beta)


def critical_alpha_for(n: int, beta: float) -> float:
    """
    Critical exponent for a given weight.

    Args:
        n: Dimension.
        beta: Weight exponent in [0, n).

    Returns:
        float: (n - beta) omega^(1/(n-1)), the unique alpha with alpha/alpha_n + beta/n = 1.

    Raises:
        ExponentRangeError: If beta is outside [0, n).
    """
    n = _check_dimension(n)
    beta = _check_beta(n, beta)
    return (n - beta) * sphere_measure(n) ** (1.0 / (n - 1))


@dataclass(frozen=True)
class ExponentConfig:
    """Dimension, exponents and their derived constants."""
    n: int
    alpha: float
    beta: float
    omega: float
    alpha_n: float
    alpha_n_beta: float
    critical: bool

    @property
    def c(self) -> float:
        """omega^(1/(n-1)), the Green function normalisation."""
        return self.omega ** (1.0 / (self.n - 1))

    @property
    def q(self) -> float:
        """The exponent n/(n-1) of |u| inside the exponential."""
        return self.n / (self.n - 1.0)

    @property
    def admissibility_sum(self) -> float:
        """alpha/alpha_n + beta/n."""
        return self.alpha / self.alpha_n + self.beta / self.n

    @property
    def ta_scale(self) -> float:
        """The T_a parameter a = 1 - beta/n linking F to J."""
        return 1.0 - self.beta / self.n

    def with_alpha(self, alpha: float) -> "ExponentConfig":
        """Return a config with the same n, beta and a new alpha."""
        return make_config(self.n, alpha, self.beta)


def make_config(n: int, alpha: float, beta: float) -> ExponentConfig:
    """
    Build an admissible exponent configuration.

    Args:
        n: Dimension, at least 2.
        alpha: Positive exponent.
        beta: Weight exponent in [0, n).

    Returns:
        ExponentConfig: Config with derived constants and criticality flag.

    Raises:
        InvalidDimensionError: If n < 2.
        ExponentRangeError: If alpha <= 0 or beta is outside [0, n).
        AdmissibilityError: If alpha/alpha_n + beta/n > 1 + 1e-12.
    """
    n = _check_dimension(n)
    beta = _check_beta(n, beta)
    if not alpha > 0:
        raise ExponentRangeError(f"alpha must be positive, got {alpha}")

    omega = sphere_measure(n)
    root = omega ** (1.0 / (n - 1))
    alpha_n = n * root
    alpha_n_beta = (n - beta) * root
    total = alpha / alpha_n + beta / n
    if total > 1.0 + CRITICAL_TOLERANCE:
        raise AdmissibilityError(
            f"alpha/alpha_n + beta/n = {total:.15g} exceeds 1 for (n={n}, alpha={alpha}, beta={beta})"
        )

    return ExponentConfig(
        n=n,
        alpha=float(alpha),
        beta=beta,
        omega=omega,
        alpha_n=alpha_n,
        alpha_n_beta=alpha_n_beta,
        critical=abs(total - 1.0) <= CRITICAL_TOLERANCE,
    )


def critical_config(n: int, beta: float = 0.0) -> ExponentConfig:
    """Convenience constructor for the critical config (n, alpha_{n,beta}, beta)."""
    return make_config(n, critical_alpha_for(n, beta), beta)
