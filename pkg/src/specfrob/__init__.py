"""specfrob: exact jet-level Frobenius / Hodge-filtration constructions
plus a numerical Hitchin-system period laboratory."""

__version__ = "0.1.0"
