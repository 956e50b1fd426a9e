"""Backend selection for the hot loops.

The compiled extension is preferred; the numpy fallback is used when it has
not been built. Both expose ``top_l``, ``count_hits`` and ``auc_tally`` with
identical semantics.
"""

from . import _pykernels

try:
    from . import _ckernels
except ImportError:  # extension not built
    _ckernels = None

BACKENDS = ("cython", "python")

_active = _ckernels if _ckernels is not None else _pykernels


def available_backends():
    return [name for name in BACKENDS if name == "python" or _ckernels is not None]


def get_backend(name=None):
    """Return the kernel module for ``name`` (``None`` means the active one)."""
    if name is None:
        return _active
    if name == "python":
        return _pykernels
    if name == "cython":
        if _ckernels is None:
            raise ImportError("compiled kernels are not built; run `pip install -e .`")
        return _ckernels
    raise ValueError(f"unknown backend {name!r}; expected one of {BACKENDS}")


def backend_name(module=None):
    module = module or _active
    return "cython" if module is _ckernels and module is not None else "python"


def use_backend(name):
    """Switch the process-wide default backend."""
    global _active
    _active = get_backend(name)
    return _active


def top_l(scores, excl_indptr, excl_indices, L):
    return _active.top_l(scores, excl_indptr, excl_indices, L)


def count_hits(items, test_indptr, test_indices, L):
    return _active.count_hits(items, test_indptr, test_indices, L)


def auc_tally(scores, users, pos, neg):
    return _active.auc_tally(scores, users, pos, neg)

