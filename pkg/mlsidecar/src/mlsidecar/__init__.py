"""Offline exporter of feature-extractor weights and box proposals.

Produces the two artifact kinds the rdmc toolkit consumes: truncated
VGG-11 weights in the FTEN tensor format, and JSON box-proposal
documents.  Everything here runs offline ahead of encoding; the
consumer never imports this package.
"""

from .proposals import (
    ProposalError,
    component_boxes,
    export_proposals,
    load_image_gray,
    saliency_map,
    write_proposals,
)
from .weights import (
    ExportError,
    collect_vgg11_tensors,
    export_reference_activations,
    export_vgg11_weights,
    load_ften,
    reference_activations,
    save_ften,
    validate_topology,
)

__all__ = [
    "ExportError",
    "ProposalError",
    "collect_vgg11_tensors",
    "component_boxes",
    "export_proposals",
    "export_reference_activations",
    "export_vgg11_weights",
    "load_ften",
    "load_image_gray",
    "reference_activations",
    "saliency_map",
    "save_ften",
    "validate_topology",
    "write_proposals",
]

__version__ = "0.1.0"
