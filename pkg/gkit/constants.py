"""This module contains the lookup table of Grothendieck's constant bounds."""
from dataclasses import dataclass

from gkit.exceptions import ConfigError

# Best known bounds on the real and complex Grothendieck constants.
KG_REAL_LOWER = 1.67696
KG_REAL_UPPER = 1.782
KG_COMPLEX_LOWER = 1.33807
KG_COMPLEX_UPPER = 1.40491


@dataclass(frozen=True)
class Constants:
    """Grothendieck constants used by every ``<= K_G`` check.

    ``kg_effective`` stands in for the unknown exact value of K_G and
    defaults to the best known real upper bound. The complex bounds are
    carried along but every operation works over the reals.
    """

    kg_effective: float = KG_REAL_UPPER
    kg_real_lower: float = KG_REAL_LOWER
    kg_real_upper: float = KG_REAL_UPPER
    kg_complex_lower: float = KG_COMPLEX_LOWER
    kg_complex_upper: float = KG_COMPLEX_UPPER

    def __post_init__(self):
        if not self.kg_effective >= self.kg_real_lower:
            raise ConfigError(
                f"kg_effective={self.kg_effective!r} is below the known lower "
                f"bound {self.kg_real_lower!r}"
            )

    def kg_power(self, exponent: int) -> float:
        """K_G**exponent, the constant of an (exponent+1)-linear form."""
        return self.kg_effective ** max(exponent, 0)
