"""kbmap-sidecar: HTTP embedding/generation service, toy trainable triple
translator, and taxonomy exporter for the kbmap pipeline."""

from .app import create_app
from .embedders import HashEmbedder, make_embedder
from .generators import CheckpointGenerator, TemplateGenerator, make_generator
from .taxonomy import export_taxonomy

__version__ = "0.1.0"
