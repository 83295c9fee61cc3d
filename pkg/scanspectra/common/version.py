# Bumped whenever a field of the JSON report changes meaning or disappears
SCHEMA_VERSION = 1


def tool_version() -> str:
    from scanspectra import __version__
    return __version__
