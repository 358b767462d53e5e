"""Exception hierarchy shared by every stage of the toolkit."""


class ThermoscanError(Exception):
    """Base class for all errors raised by thermoscan."""


class ValidationError(ThermoscanError, ValueError):
    """Input or parameter outside its documented range."""


class ProcessingError(ThermoscanError):
    """A stage ran on valid input but could not produce a result."""


# -- ingestion ---------------------------------------------------------------

class UnreadableFile(ThermoscanError, OSError):
    pass


class UnsupportedFormat(ValidationError):
    pass


class RaggedRows(ValidationError):
    pass


class NonNumericCell(ValidationError):
    pass


# -- geometry ----------------------------------------------------------------

class NoCalibration(ValidationError):
    pass


class OutOfBounds(ValidationError, IndexError):
    pass


class RectLargerThanImage(ValidationError):
    pass


class DimensionMismatch(ValidationError):
    pass


# -- registration --------------------------------------------------------------

class DegenerateConfiguration(ValidationError):
    pass


class EmptySearchSpace(ValidationError):
    pass


# -- features / classification -------------------------------------------------

class EmptySegment(ProcessingError):
    """No pixel reached the threshold, so there is no hot region to describe."""


class EmptyGallery(ValidationError):
    pass


class GalleryTooSmall(ValidationError):
    pass


# -- synthesis -----------------------------------------------------------------

class SpecOutOfBounds(ValidationError):
    pass


def parse_enum(cls, value):
    """``cls(value)``, raising :class:`ValidationError` for unknown values."""
    try:
        return cls(value)
    except ValueError:
        choices = ", ".join(m.value for m in cls)
        raise ValidationError(f"{value!r} is not a valid {cls.__name__.lower()} (choose from {choices})") from None
