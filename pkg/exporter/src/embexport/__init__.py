"""Offline embedding exporter.

Runs an image-text encoder over view images and phrases and writes the
navigation engine's binary store format. The engine never hosts a model;
this tool is the only place embeddings are computed.
"""

__version__ = "0.1.0"
