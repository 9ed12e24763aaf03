"""Feature extractors, grouped by the six measure families."""
