"""Empty init file."""
