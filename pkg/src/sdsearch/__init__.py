"""Search engine for repositories of spatial point datasets.

Datasets are indexed once into a unified two-level structure (per-dataset
trees under one repository tree, plus grid signatures), after which four
query families run against it: dataset range search, exemplar top-k by
several similarity/distance measures, in-dataset point range search, and
per-point nearest neighbours.
"""

from .core import (Dataset, DatasetError, IndexFormatError, ManifestError,
                   Mbr, MetricKind, Repository, SearchError, euclidean,
                   mbr_of)
from .grid import Grid, morton_decode, morton_encode
from .index import (UnifiedIndex, build, knee_threshold, query_tree,
                    split_space)
from .kernels import backend_name
from .metrics import (default_epsilon, gbo, haus_approx, haus_bounds,
                      haus_exact, haus_symmetric, ia, index_epsilon)
from .io import (generate_synthetic, load_dataset, load_index, load_manifest,
                 load_points, load_repository, save_index)
from .search import (DatasetHit, NNResult, RangeQuery, exemplar_search,
                     nn_point_search, range_dataset_search,
                     range_point_search)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "backend_name",
    "build",
    "Dataset",
    "DatasetError",
    "DatasetHit",
    "default_epsilon",
    "euclidean",
    "exemplar_search",
    "gbo",
    "generate_synthetic",
    "Grid",
    "haus_approx",
    "haus_bounds",
    "haus_exact",
    "haus_symmetric",
    "ia",
    "index_epsilon",
    "IndexFormatError",
    "knee_threshold",
    "load_dataset",
    "load_index",
    "load_manifest",
    "load_points",
    "load_repository",
    "ManifestError",
    "Mbr",
    "mbr_of",
    "MetricKind",
    "morton_decode",
    "morton_encode",
    "NNResult",
    "nn_point_search",
    "query_tree",
    "RangeQuery",
    "range_dataset_search",
    "range_point_search",
    "Repository",
    "save_index",
    "SearchError",
    "split_space",
    "UnifiedIndex",
]
