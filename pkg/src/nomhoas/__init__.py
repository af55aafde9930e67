"""nomhoas: execute nominal-logic programs and HOAS fixed-point definitions,
translate the former into the latter, and cross-check the two engines."""

__version__ = "0.1.0"
