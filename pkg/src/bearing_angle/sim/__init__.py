"""Scenario engine, presets and Monte-Carlo aggregation."""
