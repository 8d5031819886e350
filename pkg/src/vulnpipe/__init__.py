"""vulnpipe: C dependence slicing into labeled multiclass vulnerability samples."""

__version__ = "0.1.0"
