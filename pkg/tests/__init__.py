"""Axela tests."""
