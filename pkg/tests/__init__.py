"""Test suite for obstaclelab."""
