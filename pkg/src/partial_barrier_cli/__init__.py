"""partial_barrier_cli package."""
