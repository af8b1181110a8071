"""Out-of-process adapter: runs one scenario script in the SCENIC/CARLA
stack (or a stub) and reports a JSON result manifest."""

__version__ = "0.1.0"
