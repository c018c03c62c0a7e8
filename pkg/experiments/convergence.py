"""Observed orders of convergence under grid refinement."""

import math
from typing import Any

# Errors below this are round-off; no order is inferred from them
ROUND_OFF_FLOOR = 1e-12


def convergence_orders(h_values, errors, floor: float = ROUND_OFF_FLOOR) -> list[float | None]:
    """log(e_i / e_{i+1}) / log(h_i / h_{i+1}) between successive refinements.

    Pairs involving a missing or round-off-level error give None.
    """
    orders: list[float | None] = []
    pairs = list(zip(h_values, errors, strict=True))
    for (h_a, e_a), (h_b, e_b) in zip(pairs, pairs[1:], strict=False):
        if e_a is None or e_b is None or e_a <= floor or e_b <= floor or h_a == h_b:
            orders.append(None)
            continue
        orders.append(math.log(e_a / e_b) / math.log(h_a / h_b))
    return orders


def attach_orders(rows: list[dict[str, Any]], h_key: str, error_keys) -> list[dict[str, Any]]:
    """Copy of ``rows`` sorted by decreasing h with ``order_<error>`` columns added."""
    ordered = sorted(
        (dict(row) for row in rows if row.get(h_key) is not None),
        key=lambda row: row[h_key],
        reverse=True,
    )
    for key in error_keys:
        orders = convergence_orders([row[h_key] for row in ordered], [row.get(key) for row in ordered])
        for row, order in zip(ordered[1:], orders, strict=True):
            row[f"order_{key}"] = order
    return ordered
