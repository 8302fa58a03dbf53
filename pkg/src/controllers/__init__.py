"""Controllers - orchestration of the pipeline stages.

Imports are lazy so `import controllers` stays cheap for the CLI parser.
"""

__all__ = [
    'PipelineController',
    'main',
]


def __getattr__(name: str):
    """Lazy imports."""
    if name == 'PipelineController':
        from .pipeline_controller import PipelineController
        return PipelineController
    if name == 'main':
        from .cli import main
        return main
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")
