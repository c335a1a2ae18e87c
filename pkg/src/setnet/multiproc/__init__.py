from .multiproc_fn import FnMultiProcessor, multi_fn_with_output

__all__ = ["FnMultiProcessor", "multi_fn_with_output"]
