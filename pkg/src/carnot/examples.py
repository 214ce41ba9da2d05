"""Built-in submanifolds used by the tests and the command line."""
from __future__ import annotations

from .group import builtin_group
from .submanifold import ImplicitSubmanifold

# name -> (group, defining polynomials in x1..xq)
SUBMANIFOLDS = {
    "h1_plane": ("h1", ["x3"]),
    "h1_paraboloid": ("h1", ["x3 - x1^2 - x2^2"]),
    "h1_vertical": ("h1", ["x1"]),
    "pi_plane": ("pi", ["x2 - x1"]),
    "heisheis": ("h1xh1", ["x5 + x5^3 - x1^2 - x2^2 - x3^3", "x1^2 - x6 + x3^4", "x3 - x1^3"]),
    "free_curve_surface": ("free2_3", ["x4 - x1*x3", "x5 + x2^2 - x6"]),
}


def builtin_submanifold(name) -> ImplicitSubmanifold:
    try:
        group, exprs = SUBMANIFOLDS[name]
    except KeyError:
        raise KeyError(f"unknown submanifold {name!r}; choose from {sorted(SUBMANIFOLDS)}") from None
    return ImplicitSubmanifold.from_strings(builtin_group(group), exprs, name=name)
