"""Multi-task variable screening with simultaneous orthogonal matching pursuit."""
from .alasso import AlassoConfig, AlassoDiagnostics, exact_support_pipeline
from .baselines import METHODS, BaselineConfig, isis_screen, omp_single, run_pipeline, sis_screen
from .bic import BicParams, bic_score
from .datamodel import (CoefficientMatrix, MultiTaskDataset, SelectionPath, SupportSet,
                        TrueModel, exact_support, union_support)
from .metrics import aggregate, replicate_report
from .simgen import SimulationSpec, generate, paper_spec
from .somp import SompConfig, run_somp, screen, select_by_bic

__all__ = [
    "AlassoConfig", "AlassoDiagnostics", "BaselineConfig", "BicParams", "CoefficientMatrix",
    "METHODS", "MultiTaskDataset", "SelectionPath", "SimulationSpec", "SompConfig",
    "SupportSet", "TrueModel", "aggregate", "bic_score", "exact_support",
    "exact_support_pipeline", "generate", "isis_screen", "omp_single", "paper_spec",
    "replicate_report", "run_pipeline", "run_somp", "screen", "select_by_bic", "sis_screen",
    "union_support",
]
__version__ = "0.1.0"
