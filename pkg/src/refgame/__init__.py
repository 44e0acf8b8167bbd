"""Reference implementation of refereed-game decision procedures."""
