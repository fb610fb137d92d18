"""Formal expansions of the singular Yamabe solution."""
