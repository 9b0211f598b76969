"""Prompting, response collection, per-trial scoring and reporting."""
