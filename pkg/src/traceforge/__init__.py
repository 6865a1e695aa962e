"""Local and global terms of the GL(2) trace formula over Q, with checks."""

__version__ = "0.1.0"
