class AdapterError(Exception):
    """Base class for extraction failures."""


class DatasetError(AdapterError):
    """Dataset file missing fields or out-of-range sampling parameters."""


class UnsupportedArchitecture(AdapterError):
    """The checkpoint does not expose the expected component layout."""
