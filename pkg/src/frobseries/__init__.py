"""High-precision Frobenius series with a-priori coefficient estimates."""
__version__ = "0.1.0"
