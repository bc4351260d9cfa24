"""Export embeddings from pretrained CNNs into the view-file format.

Companion to the ``rfsvm`` classification pipeline: each extractor turns an
image manifest into one view file (deep features as columns), which fuses
with handcrafted views downstream. Supported extractors and their flattened
embedding widths: resnet18 (512), resnet152 (2048), resnext (2048),
nasnet_a (4032, needs the optional ``pretrainedmodels`` backend), and
vgg16 (25088, the flattened 512x7x7 final max-pool output).
"""

from .extract import ExtractReport, extract_deep_view, load_manifest, verify_view_compat
from .extractors import SPECS, ExtractorSpec, SetupError, build_extractor, get_spec

__version__ = "0.1.0"
