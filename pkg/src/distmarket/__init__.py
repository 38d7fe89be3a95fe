"""Distribution market clearing and settlement."""
