"""Motion-compensated integer wavelet lifting for volumetric sequences.

Decomposes a frame sequence into lowpass/highpass subbands with bit-exact
inversion, comparing no compensation, block matching, deformable-mesh
warping, and a graph method that reuses the mesh motion vectors as geometric
edge weights instead of warped intensities.
"""
from .backend import BACKEND
from .graph import (EdgeSet, SparseMatrix, build_adjacency, build_edges,
                    build_prediction_matrix, edge_weight, pair_matrices,
                    transition_matrix, update_from_prediction)
from .lifting import (METHODS, DecomposeResult, LiftingParams, SubbandPair,
                      compose_pair, compose_volume, decompose_pair,
                      decompose_volume, graph_lift, graph_unlift, haar_lift,
                      haar_unlift, rebuild_pair)
from .metrics import entropy_bits, lp_quality, mean_energy, psnr
from .motion import (BlockMVF, DensePositionField, MeshMVF, block_to_dense,
                     decode_mvf, encode_mvf, estimate_block_mvf,
                     estimate_mesh_mvf, upsample_grid)
from .volume import PhantomSpec, Volume, generate_phantom, load_volume, save_volume
from .warping import inverse_warp_block, inverse_warp_mesh, warp

__version__ = "0.1.0"
