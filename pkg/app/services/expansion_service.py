import logging
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

import mpmath
import numpy as np

from app.errors import DomainError
from app.models import ExpansionStep, ExpansionTrace, SignSpec
from app.numerics import Scalar, exact, to_mpf
from app.services.partition_service import Partition

logger = logging.getLogger(__name__)

# float orbits redraw their unresolved low-order part once this much of the point is unknown
REFRESH_THRESHOLD = 2.0**-30
FLOAT_RESOLUTION = 2.0**-53


class ExpansionService:
    """Service for the maps T_ε, digit expansions and approximation coefficients."""

    def point(self, partition: Partition, x: object) -> Scalar:
        """x in the partition's arithmetic: exact for rational partitions, mpf otherwise."""
        if partition.exact:
            value = exact(x)
        else:
            value = to_mpf(exact(x) if isinstance(x, str) else x)
        if value < 0 or value > 1:
            raise DomainError(f"x must lie in [0, 1], got {x}")
        return value

    def apply_T(self, partition: Partition, eps: SignSpec, x: object) -> Tuple[Scalar, Optional[int], int]:
        """One step of T_ε: (T_ε(x), digit, sign); digit None stands for ∞ at x = 0."""
        value = self.point(partition, x)
        if value == 0:
            return value, None, 0
        digit = partition.locate(value)
        sign = eps.bit(digit)
        if sign:
            image = (partition.t(digit) - value) / partition.a(digit)
        else:
            image = (value - partition.t(digit + 1)) / partition.a(digit)
        return image, digit, sign

    def expand(self, partition: Partition, eps: SignSpec, x: object, n_steps: int) -> ExpansionTrace:
        """Digits, signs, orbit, convergents and θ_n for the first n_steps steps."""
        if n_steps < 1:
            raise DomainError(f"n_steps must be at least 1, got {n_steps}")

        # each step can cost log10(1/a_d) digits on inexact partitions
        extra_digits = 0 if partition.exact else 4 * n_steps
        with mpmath.workdps(mpmath.mp.dps + extra_digits):
            x0 = self.point(partition, x)
            orbit = x0
            approx: Scalar = x0 * 0
            scale: Scalar = x0 * 0 + 1  # product of a_{d_i} so far
            flips = 0  # parity of the sign sum so far
            steps: List[ExpansionStep] = []
            terminated = False

            for n in range(1, n_steps + 1):
                orbit, digit, sign = self.apply_T(partition, eps, orbit)
                if digit is None:
                    terminated = True
                    steps.append(
                        ExpansionStep(n=n, d=None, s=0, orbit=0.0, q=None, approx=float(approx), theta=0.0)
                    )
                    continue

                endpoint = partition.t(digit + 1 - sign)
                term = endpoint * scale
                approx = approx - term if flips else approx + term
                q = 1 / term
                theta = q * abs(x0 - approx)
                steps.append(
                    ExpansionStep(
                        n=n,
                        d=digit,
                        s=sign,
                        orbit=float(orbit),
                        q=float(q),
                        approx=float(approx),
                        theta=float(theta),
                    )
                )
                scale = scale * partition.a(digit)
                flips ^= sign

        return ExpansionTrace(x0=float(x0), steps=steps, terminated=terminated)

    def theta_identity_check(self, trace: ExpansionTrace, partition: Partition) -> float:
        """Largest |θ_n - a_{d_n} / t_{d_n+1-s_n} * T^n(x)| along the trace."""
        residual = 0.0
        for step in trace.steps:
            if step.d is None:
                expected = 0.0
            else:
                expected = float(partition.a(step.d) / partition.t(step.d + 1 - step.s)) * step.orbit
            residual = max(residual, abs(step.theta - expected))
        return residual

    def reconstruct(self, partition: Partition, digits: Sequence[Optional[int]], signs: Sequence[int]) -> Scalar:
        """Partial sum of the expansion series from digits and signs."""
        total: Scalar = Fraction(0) if partition.exact else to_mpf(0)
        scale: Scalar = total + 1
        flips = 0
        for digit, sign in zip(digits, signs):
            if digit is None:
                break
            term = partition.t(digit + 1 - sign) * scale
            total = total - term if flips else total + term
            scale = scale * partition.a(digit)
            flips ^= sign
        return total

    def orbit_thetas(
        self, partition: Partition, eps: SignSpec, n_iter: int, seed: int, x0: Optional[float] = None
    ) -> np.ndarray:
        """θ_1..θ_N along one orbit, in floats.

        The initial point is sampled lazily: its uncertainty grows by 1/a_d per step and, past
        REFRESH_THRESHOLD, the unresolved part is redrawn from the seeded stream. Exact orbits of
        finite-precision points would otherwise collapse onto 0 or 1 within a few dozen steps.
        """
        if n_iter < 1:
            raise DomainError(f"n_iter must be at least 1, got {n_iter}")
        rng = np.random.default_rng(seed)
        if x0 is None:
            y = rng.random()
        elif 0 < x0 < 1:
            y = float(x0)
        else:
            raise DomainError(f"x0 must lie in (0, 1), got {x0}")

        thetas = np.empty(n_iter)
        uncertainty = FLOAT_RESOLUTION
        refreshes = 0
        for i in range(n_iter):
            if y <= 0.0:
                y = max(uncertainty, FLOAT_RESOLUTION) * (1.0 - rng.random())
            digit = partition.locate_float(y)
            sign = eps.bit(digit)
            width = partition.a_float(digit)
            if sign:
                y = (partition.t_float(digit) - y) / width
            else:
                y = (y - partition.t_float(digit + 1)) / width
            y = min(max(y, 0.0), 1.0)
            thetas[i] = width / partition.t_float(digit + 1 - sign) * y

            uncertainty /= width
            if uncertainty >= 0.5:
                y = rng.random()
                uncertainty = FLOAT_RESOLUTION
                refreshes += 1
            elif uncertainty > REFRESH_THRESHOLD:
                y = min(max(y + uncertainty * (rng.random() - 0.5), 0.0), 1.0)
                uncertainty = FLOAT_RESOLUTION
                refreshes += 1

        logger.debug(f"Orbit of {n_iter} steps used {refreshes} refreshes")
        return thetas

    def sample_digits(self, partition: Partition, eps: SignSpec, n: int, n_samples: int, seed: int) -> np.ndarray:
        """d_n for n_samples uniform random starting points."""
        rng = np.random.default_rng(seed)
        digits = np.empty(n_samples, dtype=np.int64)
        for i, y in enumerate(rng.random(n_samples)):
            y = float(y) or FLOAT_RESOLUTION
            digit = partition.locate_float(y)
            for _ in range(n - 1):
                sign = eps.bit(digit)
                width = partition.a_float(digit)
                if sign:
                    y = (partition.t_float(digit) - y) / width
                else:
                    y = (y - partition.t_float(digit + 1)) / width
                y = min(max(y, FLOAT_RESOLUTION), 1.0)
                digit = partition.locate_float(y)
            digits[i] = digit
        return digits
