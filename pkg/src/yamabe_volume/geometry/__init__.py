"""Model geometries (sampled surfaces included) and their Fermi-coordinate jets."""
