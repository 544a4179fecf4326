"""embalign-export: encoder hidden-state export for the embalign toolkit."""

__version__ = "0.1.0"

from .exporter import ExportConfig, Exporter, ExportError, write_container  # noqa: F401
