class ExporterError(Exception):
    """Base class for exporter failures."""


class MissingDataset(ExporterError):
    """The requested image dataset is not available locally."""


class ModelLoadFailure(ExporterError):
    """Pretrained weights could not be loaded."""
