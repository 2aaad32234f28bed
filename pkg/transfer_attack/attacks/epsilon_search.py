"""
Search for the smallest budget at which an attack succeeds.
"""


from typing import Callable, Generic, List, Optional, Sequence, Tuple, TypeVar

import numpy as np
from loguru import logger

from ..image import Image
from ..imgmath import pixel_variance

ResultT = TypeVar("ResultT")


class EpsilonSearchError(ValueError):
    """
    Raised for an unusable epsilon grid.
    """


class EpsilonSearchResult(Generic[ResultT]):
    """
    The outcome of an epsilon search.

    Attributes:
        epsilon: The smallest budget observed to succeed, or the largest grid
            value if none did.
        succeeded: Whether any attempt succeeded.
        trace: Every `(epsilon, success)` attempt, in evaluation order.
        best: The attack result at `epsilon`.

    """

    def __init__(
        self,
        epsilon: float,
        succeeded: bool,
        trace: List[Tuple[float, bool]],
        best: Optional[ResultT],
    ):
        self.epsilon = epsilon
        self.succeeded = succeeded
        self.trace = trace
        self.best = best

    def __repr__(self) -> str:
        return (
            f"EpsilonSearchResult(epsilon={self.epsilon}, "
            f"succeeded={self.succeeded}, attempts={len(self.trace)})"
        )


def grid_scale(
    x: Image,
    variance_reference: float,
    scale_min: float,
    scale_max: float,
) -> float:
    """
    Args:
        x: The image being attacked.
        variance_reference: Pixel variance at which the grid is unscaled.
        scale_min: Lower clamp on the scale.
        scale_max: Upper clamp on the scale.

    Returns:
        The factor to scale the epsilon grid by. Busier images get larger
        budgets.

    """
    scale = pixel_variance(x) / variance_reference
    return float(np.clip(scale, scale_min, scale_max))


def epsilon_search(
    x: Image,
    attack: Callable[[float], ResultT],
    success: Callable[[ResultT], bool],
    grid_base: Sequence[float],
    bisection_steps: int,
    *,
    variance_reference: float = 0.05,
    scale_min: float = 0.5,
    scale_max: float = 2.0,
) -> EpsilonSearchResult[ResultT]:
    """
    Tries a variance-scaled grid of budgets in ascending order until the
    attack first succeeds, then bisects between the last failure and the
    first success.

    Args:
        x: The image being attacked.
        attack: Runs the full attack at a given budget.
        success: Decides whether an attack result counts as a success.
        grid_base: The unscaled, ascending grid.
        bisection_steps: Number of bisection refinements.
        variance_reference: Pixel variance at which the grid is unscaled.
        scale_min: Lower clamp on the grid scale.
        scale_max: Upper clamp on the grid scale.

    Returns:
        The search result.

    """
    if len(grid_base) == 0:
        raise EpsilonSearchError("The epsilon grid is empty.")
    if any(a >= b for a, b in zip(grid_base, grid_base[1:])):
        raise EpsilonSearchError("The epsilon grid must be ascending.")

    scale = grid_scale(x, variance_reference, scale_min, scale_max)
    grid = [scale * value for value in grid_base]
    logger.debug("Epsilon grid scaled by {:.3f}.", scale)

    trace: List[Tuple[float, bool]] = []
    best_epsilon: Optional[float] = None
    best_result: Optional[ResultT] = None
    last_result: Optional[ResultT] = None

    def try_budget(epsilon: float) -> bool:
        nonlocal best_epsilon, best_result, last_result
        result = attack(epsilon)
        succeeded = bool(success(result))
        trace.append((epsilon, succeeded))
        logger.debug("Tried epsilon {:.5f}: success={}.", epsilon, succeeded)

        last_result = result
        if succeeded and (best_epsilon is None or epsilon < best_epsilon):
            best_epsilon, best_result = epsilon, result
        return succeeded

    first_success = None
    for index, epsilon in enumerate(grid):
        if try_budget(epsilon):
            first_success = index
            break

    if first_success is None:
        logger.info("No budget up to {:.5f} succeeded.", grid[-1])
        return EpsilonSearchResult(
            epsilon=grid[-1], succeeded=False, trace=trace, best=last_result
        )

    if first_success > 0:
        failed, succeeded = grid[first_success - 1], grid[first_success]
        for _ in range(bisection_steps):
            middle = (failed + succeeded) / 2.0
            if try_budget(middle):
                succeeded = middle
            else:
                failed = middle

    logger.info("Smallest successful budget: {:.5f}.", best_epsilon)
    return EpsilonSearchResult(
        epsilon=best_epsilon, succeeded=True, trace=trace, best=best_result
    )
