"""Deformation quantization of contact metric manifolds at the level of jets."""
__version__ = "0.1.0"

from .jets import BudgetExhausted, Jet, JetDomainError, jet_vars
from .chart import ChartStructure, ChartSyntaxError, emit_chart, parse_chart, parse_expr
from .geometry import GeometryFrame, NonContactPoint, build_frame, classify
from .registry import builtin, hopf_fiber
from .wick import NuSeries, WickElement
from .fedosov import FedosovState, delta_op, quantum_lift, solve_r, star

__all__ = [
    "BudgetExhausted", "ChartStructure", "ChartSyntaxError", "FedosovState", "GeometryFrame",
    "Jet", "JetDomainError", "NonContactPoint", "NuSeries", "WickElement", "build_frame",
    "builtin", "classify", "delta_op", "emit_chart", "hopf_fiber", "jet_vars", "parse_chart",
    "parse_expr", "quantum_lift", "solve_r", "star",
]
