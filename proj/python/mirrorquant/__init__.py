"""Mirror-descent quantization of neural networks: python bindings.

The heavy lifting lives in the C++ extension ``_mirrorquant``; this package
re-exports it and adds a dict-friendly ``train`` wrapper.
"""

import json as _json

try:
    from . import _mirrorquant as _core
except ImportError:  # flat layout: extension next to the package directory
    import _mirrorquant as _core

from_core = [name for name in dir(_core) if not name.startswith("_")]
globals().update({name: getattr(_core, name) for name in from_core})

__all__ = from_core + ["train"]
__version__ = "0.1.0"


def train(config):
    """Run a training job from a config dict; returns the summary as a dict.

    The config schema matches the ``mirrorquant train`` CLI subcommand; unknown
    keys raise RuntimeError naming the offending key.
    """
    return _json.loads(_core.train_json(_json.dumps(config)))
