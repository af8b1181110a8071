"""dashsim: convert dashcam crash videos into simulator-ready scenario
scripts, verified and refined against a per-feature similarity gate."""

__version__ = "0.1.0"
