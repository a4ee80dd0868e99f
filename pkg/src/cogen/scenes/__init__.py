"""Shipped scene files."""
