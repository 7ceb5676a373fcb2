class ExportError(Exception):
    """Base class for exporter failures."""


class ManifestError(ExportError):
    """Manifest is malformed: bad record, duplicate key, or unknown kind."""


class MissingImage(ExportError):
    """An image source path does not exist at export time."""


class ModelLoadError(ExportError):
    """The requested encoder model could not be loaded."""


class WriteError(ExportError):
    """The output store file could not be written."""
