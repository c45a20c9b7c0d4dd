"""Adaptive Simpson quadrature."""

from __future__ import annotations

from typing import Callable


def _simpson(fa: float, fm: float, fb: float, width: float) -> float:
    return width / 6.0 * (fa + 4.0 * fm + fb)


def adaptive_simpson(f: Callable[[float], float], a: float, b: float,
                     rel_tol: float = 1e-10, abs_tol: float = 1e-300,
                     max_depth: int = 50, n_panels: int = 16) -> float:
    """Integrate ``f`` over ``[a, b]`` (signed when ``b < a``).

    The interval is first split into ``n_panels`` panels; a coarse Simpson
    sum over them sets the absolute target ``rel_tol * |coarse|``, which is
    then shared among panels and halved at every bisection. Each accepted
    piece gets the usual Richardson correction.
    """
    if a == b:
        return 0.0
    if b < a:
        return -adaptive_simpson(f, b, a, rel_tol, abs_tol, max_depth, n_panels)

    width = (b - a) / n_panels
    xs = [a + k * width for k in range(n_panels)] + [b]
    fx = [f(x) for x in xs]
    mids = [0.5 * (xs[k] + xs[k + 1]) for k in range(n_panels)]
    fm = [f(m) for m in mids]
    wholes = [_simpson(fx[k], fm[k], fx[k + 1], xs[k + 1] - xs[k]) for k in range(n_panels)]
    target = max(rel_tol * abs(sum(wholes)), abs_tol)

    total = 0.0
    # explicit stack of (lo, hi, f(lo), f(mid), f(hi), whole, tol, depth)
    stack = [(xs[k], xs[k + 1], fx[k], fm[k], fx[k + 1], wholes[k], target / n_panels, 0)
             for k in range(n_panels)]
    while stack:
        lo, hi, flo, fmid, fhi, whole, tol, depth = stack.pop()
        mid = 0.5 * (lo + hi)
        lm, rm = 0.5 * (lo + mid), 0.5 * (mid + hi)
        flm, frm = f(lm), f(rm)
        left = _simpson(flo, flm, fmid, mid - lo)
        right = _simpson(fmid, frm, fhi, hi - mid)
        delta = left + right - whole
        if depth >= max_depth or abs(delta) <= 15.0 * tol:
            total += left + right + delta / 15.0
        else:
            stack.append((lo, mid, flo, flm, fmid, left, 0.5 * tol, depth + 1))
            stack.append((mid, hi, fmid, frm, fhi, right, 0.5 * tol, depth + 1))
    return total
