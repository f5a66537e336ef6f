"""Selective physics-based simulation for search-based planning."""
