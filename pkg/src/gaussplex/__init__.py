"""Density-filtered simplicial complexes from Gaussian kernel sums."""

from .alpha import (AlphaComplex, PowerDiagram, SimplexRecord, build_alpha,
                    power_diagram_from_cover, vertex_positions)
from .errors import (EmptyReferenceError, InputError, SolverFailure,
                     StateError)
from .filtration import (FilteredComplex, InterleavingReport,
                         alpha_filtration, check_interleaving,
                         sampled_simplex_weights, witness_weights)
from .landmarks import (CoverParams, CoverReport, ReferenceSet,
                        nested_reference_check, select_landmarks,
                        superlevel_reference, verify_cover)
from .mixture import (DensityCutoff, GaussianMixture, MaxGaussianCover,
                      PointCloud)
from .persistence import (Bar, Barcode, betti_at, compute_persistence,
                          filter_bars, read_barcode_csv, write_barcode_csv)
from .qp import (CellProblem, PowerCellSolver, QpSolution, brute_force_cell,
                 feasibility, solve_cell)

__version__ = "0.1.0"
