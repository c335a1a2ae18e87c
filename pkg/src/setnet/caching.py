"""
Disk caching of parsed datasets with joblib.

Parsing a gzipped IDX or CIFAR binary file takes a few seconds, the cached arrays load in
well under one. The cache key is the function arguments, so the file path and its mtime are
passed explicitly to invalidate entries when a file changes.
"""

from __future__ import annotations

from pathlib import Path
from typing import Any, Callable, Optional

import joblib

from setnet.paths import get_cache_dir


def get_joblib_memory(location: Optional[Path] = None, verbose: int = 0) -> joblib.Memory:
    """
    Wrapper for joblib.Memory with the setnet cache dir as default location.

    Args:
        location: cache dir, defaults to SETNET_CACHE_DIR/joblib
        verbose: higher = more verbose

    Returns:
        memory: use as @memory.cache decorator for functions
    """
    if location is None:
        location = get_cache_dir() / "joblib"
    return joblib.Memory(location=location, verbose=verbose)


def cached_call(use_cache: bool, func: Callable, *args: Any, **kwargs: Any) -> Any:
    """Call func directly, or through the disk cache if use_cache is True."""
    if not use_cache:
        return func(*args, **kwargs)
    return get_joblib_memory().cache(func)(*args, **kwargs)