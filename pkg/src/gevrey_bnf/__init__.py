"""Birkhoff normal forms near Kronecker tori with Gevrey diagnostics."""
__version__ = "0.1.0"
