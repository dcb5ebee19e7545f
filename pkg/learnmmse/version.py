import sys

if sys.version_info >= (3, 8):
    from importlib import metadata as importlib_metadata
else:
    import importlib_metadata

__all__ = ("get_version", "version", "VERSION", "__version__")


def get_version() -> str:
    try:
        return importlib_metadata.version("learnmmse")
    except importlib_metadata.PackageNotFoundError:
        return "unknown"


version: str = get_version()
VERSION: str = version
__version__: str = version
