"""Volume expansions and the energy invariants read off from them."""
