"""Unit tests for observed convergence orders."""

import pytest

from experiments.convergence import attach_orders, convergence_orders

pytestmark = pytest.mark.unit


def test_second_order_errors():
    h = [1 / 16, 1 / 32, 1 / 64]
    errors = [x**2 for x in h]
    assert convergence_orders(h, errors) == [pytest.approx(2.0), pytest.approx(2.0)]


def test_round_off_errors_give_no_order():
    assert convergence_orders([0.1, 0.05, 0.025], [1e-3, 1e-14, None]) == [None, None]


def test_attach_orders_sorts_by_decreasing_spacing():
    rows = [
        {"h": 0.025, "error_inf": 0.025},
        {"h": 0.1, "error_inf": 0.1},
        {"h": 0.05, "error_inf": 0.05},
        {"h": None, "error_inf": 1.0},
    ]
    ordered = attach_orders(rows, "h", ["error_inf"])
    assert [row["h"] for row in ordered] == [0.1, 0.05, 0.025]
    assert "order_error_inf" not in ordered[0]
    assert ordered[1]["order_error_inf"] == pytest.approx(1.0)
    assert ordered[2]["order_error_inf"] == pytest.approx(1.0)
    assert "order_error_inf" not in rows[0]
