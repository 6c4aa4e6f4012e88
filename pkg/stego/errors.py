class InvalidImageError(ValueError):
    """Raised for images with bad dimensions or mismatched shapes."""


class CapacityError(ValueError):
    """Raised when a payload does not fit into a cover image."""

    def __init__(self, required: int, available: int):
        super().__init__(f"payload needs {required} bytes but the cover holds {available}")
        self.required = required
        self.available = available


class MalformedStegoError(ValueError):
    """Raised when an image does not carry a well-formed LSB payload."""
