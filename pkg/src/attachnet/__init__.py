"""Communication and shared-attachment networks from email archives."""

__version__ = "0.1.0"
