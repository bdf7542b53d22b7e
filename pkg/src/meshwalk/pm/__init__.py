"""Progressive-mesh codec: collapse/split, simplification, records."""
from meshwalk.pm.mesh import TriangleMesh, read_mesh, validate, write_mesh
from meshwalk.pm.ops import VertexSplit, edge_collapse, vertex_split
from meshwalk.pm.records import (
    ResolutionRecord,
    deserialize_record,
    pm_records,
    records_to_mesh,
    serialize_record,
    synthetic_object_sizes,
    synthetic_record,
)
from meshwalk.pm.simplify import PMStream, simplify

__all__ = [
    "PMStream",
    "ResolutionRecord",
    "TriangleMesh",
    "VertexSplit",
    "deserialize_record",
    "edge_collapse",
    "pm_records",
    "read_mesh",
    "records_to_mesh",
    "serialize_record",
    "simplify",
    "synthetic_object_sizes",
    "synthetic_record",
    "validate",
    "vertex_split",
    "write_mesh",
]
