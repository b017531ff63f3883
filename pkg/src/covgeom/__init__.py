"""Local covariance geometry on sampled manifolds.

Covariance-corrected geodesic distances, EIG distances under an unknown
deformation, and LLE / LDR-LLE Laplacian estimates.
"""
__version__ = "0.1.0"

from ._backend import BACKEND
from .covariance import (LocalCovariance, LocalDataMatrix, TangentFrame, local_data_matrix,
                         normalized_covariance, project_normal, sample_covariance,
                         tangent_frame)
from .eig import (DeformedDataset, EigParams, alpha_sensitivity_scan, deform, eig_distance,
                  eig_distance_matrix, ellipsoid_neighbors, make_deformation)
from .embedding import (assemble_lle_matrix, diffusion_maps_eigenvalues, embed,
                        laplacian_eigenvalues, ldr_lle_weights, lle_weights)
from .errors import *  # noqa: F401,F403
from .geodesic import build_local_graph, corrected_distance, shortest_paths
from .linalg import regularized_inverse, smallest_eigenpairs, sym_eig, truncated_inverse
from .manifolds import ManifoldSample, sample_manifold
from .pointcloud import (NeighborSet, PointCloud, knn_neighbors, load_csv, radius_neighbors,
                         save_csv)
