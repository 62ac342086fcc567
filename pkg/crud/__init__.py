from . import run_crud

__all__ = ["run_crud"]
