"""embedlens: explainable neighbor-embedding workbench.

Fits PCA and UMAP/t-SNE on tabular data, explains the embedding's cluster
structure through Q-residuals and Hotelling's T2 contributions, and serves
the results through an HTTP API, a CLI and Voronoi visualizations.
"""

from .dataset import Dataset, load_csv, preprocess
from .diagnostics import (
    DiagnosticsBundle,
    cluster_contributions,
    compute_diagnostics,
    hotelling_t2,
    minmax_normalize,
    q_residual,
    relative_t2_contributions,
    t2_contributions,
)
from .pca import PcaModel, auto_select_components, fit_pca, project, reconstruct
from .session import AnalysisSession, load_session, run_pipeline, save_session
from .tsne import TsneConfig, tsne_embed
from .umap import UmapConfig, UmapModel, transform_new, umap_embed
from .voronoi import VoronoiDiagram, compute_voronoi, locate_cell

__version__ = "0.1.0"

__all__ = [
    "AnalysisSession",
    "Dataset",
    "DiagnosticsBundle",
    "PcaModel",
    "TsneConfig",
    "UmapConfig",
    "UmapModel",
    "VoronoiDiagram",
    "auto_select_components",
    "cluster_contributions",
    "compute_diagnostics",
    "compute_voronoi",
    "fit_pca",
    "hotelling_t2",
    "load_csv",
    "load_session",
    "locate_cell",
    "minmax_normalize",
    "preprocess",
    "project",
    "q_residual",
    "reconstruct",
    "relative_t2_contributions",
    "run_pipeline",
    "save_session",
    "t2_contributions",
    "transform_new",
    "tsne_embed",
    "umap_embed",
]
