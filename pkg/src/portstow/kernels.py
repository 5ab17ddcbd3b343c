"""Hot loops for the container-storage solvers.

Every function here is written in the numba nopython subset.  When the JIT
is disabled (``PORTSTOW_JIT=0``) the loop-heavy primitives are swapped for
numpy equivalents and the driver loops run as ordinary Python.  Both paths
consume the same ``numpy.random.Generator`` draws in the same order, so a
run is bit-identical with or without numba.

Container ids are 1-based; ``prio[id - 1]`` is the priority of container
``id`` and ``rehandles[k]`` the number of containers stacked above slot ``k``.
"""

import numpy as np

from ._accel import JIT_ENABLED, jit

ROULETTE_EPS = 1e-9


# ---------------------------------------------------------------------------
# primitives with a numpy fallback

def _fitness_loop(prio, rehandles, assign):
    total = 0.0
    for k in range(assign.shape[0]):
        total += prio[assign[k] - 1] * rehandles[k]
    return total


def _fitness_numpy(prio, rehandles, assign):
    if assign.shape[0] == 0:
        return 0.0
    # cumsum accumulates left to right, matching the loop bit for bit
    return float(np.cumsum(prio[assign - 1] * rehandles)[-1])


def _repair_loop(vec, seen):
    n = vec.shape[0]
    for v in range(n + 1):
        seen[v] = False
    for k in range(n):
        v = vec[k]
        if seen[v]:
            vec[k] = 0
        else:
            seen[v] = True
    nxt = 1
    for k in range(n):
        if vec[k] == 0:
            while seen[nxt]:
                nxt += 1
            vec[k] = nxt
            seen[nxt] = True


def _repair_numpy(vec, seen):
    n = vec.shape[0]
    _, first = np.unique(vec, return_index=True)
    keep = np.zeros(n, dtype=np.bool_)
    keep[first] = True
    present = np.zeros(n + 1, dtype=np.bool_)
    present[vec] = True
    missing = np.flatnonzero(~present[1:]) + 1
    vec[~keep] = missing


def _argmax_loop(values):
    best = 0
    for k in range(1, values.shape[0]):
        if values[k] > values[best]:
            best = k
    return best


def _argmin_loop(values):
    best = 0
    for k in range(1, values.shape[0]):
        if values[k] < values[best]:
            best = k
    return best


def _argmax_numpy(values):
    return int(np.argmax(values))


def _argmin_numpy(values):
    return int(np.argmin(values))


def _roulette_loop(fit, rng):
    n = fit.shape[0]
    top = fit[0]
    for k in range(1, n):
        if fit[k] > top:
            top = fit[k]
    total = 0.0
    for k in range(n):
        total += top - fit[k] + ROULETTE_EPS
    r = rng.random() * total
    acc = 0.0
    for k in range(n):
        acc += top - fit[k] + ROULETTE_EPS
        if r < acc:
            return k
    return n - 1


def _roulette_numpy(fit, rng):
    cum = np.cumsum(fit.max() - fit + ROULETTE_EPS)
    r = rng.random() * cum[-1]
    return min(int(np.searchsorted(cum, r, side="right")), fit.shape[0] - 1)


if JIT_ENABLED:
    fitness_seq = jit(_fitness_loop)
    repair_inplace = jit(_repair_loop)
    argmax_first = jit(_argmax_loop)
    argmin_first = jit(_argmin_loop)
    roulette_index = jit(_roulette_loop)
else:
    fitness_seq = _fitness_numpy
    repair_inplace = _repair_numpy
    argmax_first = _argmax_numpy
    argmin_first = _argmin_numpy
    roulette_index = _roulette_numpy


# ---------------------------------------------------------------------------
# harmony search

@jit
def neighbor_index(k, size, rng):
    """Domain index one step from ``k``; the direction coin is only drawn
    when both neighbours exist."""
    if size == 1:
        return k
    if k == 0:
        return 1
    if k == size - 1:
        return size - 2
    if rng.random() < 0.5:
        return k - 1
    return k + 1


@jit
def place_swapped(vec, i, original, adjusted):
    """Put ``adjusted`` in slot ``i``; if it already sits in an earlier slot,
    that slot takes ``original`` (id swap)."""
    if adjusted != original:
        for j in range(i):
            if vec[j] == adjusted:
                vec[j] = original
                break
    vec[i] = adjusted


@jit
def improvise_ids(vec, memory, hmcr, par, rng):
    """Fill ``vec`` with a raw (unrepaired) container-id vector."""
    hms, n = memory.shape
    for i in range(n):
        if rng.random() < hmcr:
            value = memory[rng.integers(0, hms), i]
            if rng.random() < par:
                adjusted = neighbor_index(value - 1, n, rng) + 1
                place_swapped(vec, i, value, adjusted)
            else:
                vec[i] = value
        else:
            vec[i] = rng.integers(0, n) + 1


@jit
def hs_run_chunk(memory, fit, prio, rehandles, hmcr, par, remaining,
                 stagnation_limit, stagnation, best, history, rng):
    """Improvise/update until a limit is hit or ``history`` is full.

    ``remaining`` and ``stagnation_limit`` are negative when disabled.
    Returns ``(count, stagnation, best, accepted, done)`` where ``count``
    entries of ``history`` were written.
    """
    hms, n = memory.shape
    vec = np.empty(n, dtype=memory.dtype)
    seen = np.empty(n + 1, dtype=np.bool_)
    worst = argmax_first(fit)
    count = 0
    accepted = 0
    done = False
    while True:
        if remaining >= 0 and count >= remaining:
            done = True
            break
        if stagnation_limit >= 0 and stagnation >= stagnation_limit:
            done = True
            break
        if count >= history.shape[0]:
            break
        improvise_ids(vec, memory, hmcr, par, rng)
        repair_inplace(vec, seen)
        f = fitness_seq(prio, rehandles, vec)
        if f < fit[worst]:
            memory[worst, :] = vec
            fit[worst] = f
            worst = argmax_first(fit)
            accepted += 1
        if f < best:
            best = f
            stagnation = 0
        else:
            stagnation += 1
        history[count] = best
        count += 1
    return count, stagnation, best, accepted, done


# ---------------------------------------------------------------------------
# genetic algorithm

@jit
def draw_cuts(n, rng):
    """Uniform pair of 0-based cut slots ``c1 < c2``."""
    a = rng.integers(0, n)
    b = rng.integers(0, n - 1)
    if b >= a:
        b += 1
    if a < b:
        return a, b
    return b, a


@jit
def order_crossover(keep, fill, c1, c2, out, used):
    """Child keeping ``keep[c1..c2]`` with the other slots filled from
    ``fill`` in its own order, skipping ids already used."""
    n = keep.shape[0]
    for v in range(n + 1):
        used[v] = False
    for k in range(c1, c2 + 1):
        out[k] = keep[k]
        used[keep[k]] = True
    src = 0
    for k in range(n):
        if c1 <= k <= c2:
            continue
        while used[fill[src]]:
            src += 1
        out[k] = fill[src]
        used[fill[src]] = True


@jit
def swap_slots(vec, rng):
    n = vec.shape[0]
    if n < 2:
        return
    a = rng.integers(0, n)
    b = rng.integers(0, n - 1)
    if b >= a:
        b += 1
    tmp = vec[a]
    vec[a] = vec[b]
    vec[b] = tmp


@jit
def ga_run_chunk(pop, fit, prio, rehandles, crossover_rate, mutation_rate,
                 remaining_generations, stagnation_limit, stagnation,
                 max_evals, evals, best, history, rng):
    """Generational loop with elitism of one; mirrors ``hs_run_chunk``.

    Returns ``(count, stagnation, best, evals, done)``.
    """
    size, n = pop.shape
    nxt = np.empty_like(pop)
    nxt_fit = np.empty_like(fit)
    child_a = np.empty(n, dtype=pop.dtype)
    child_b = np.empty(n, dtype=pop.dtype)
    used = np.empty(n + 1, dtype=np.bool_)
    count = 0
    done = False
    while True:
        if remaining_generations >= 0 and count >= remaining_generations:
            done = True
            break
        if stagnation_limit >= 0 and stagnation >= stagnation_limit:
            done = True
            break
        if max_evals >= 0 and evals + size - 1 > max_evals:
            done = True
            break
        if count >= history.shape[0]:
            break
        elite = argmin_first(fit)
        nxt[0, :] = pop[elite]
        nxt_fit[0] = fit[elite]
        filled = 1
        while filled < size:
            a = roulette_index(fit, rng)
            b = roulette_index(fit, rng)
            if rng.random() < crossover_rate and n >= 2:
                c1, c2 = draw_cuts(n, rng)
                order_crossover(pop[a], pop[b], c1, c2, child_a, used)
                order_crossover(pop[b], pop[a], c1, c2, child_b, used)
            else:
                child_a[:] = pop[a]
                child_b[:] = pop[b]
            for which in range(2):
                if filled >= size:
                    break
                child = child_a if which == 0 else child_b
                if rng.random() < mutation_rate:
                    swap_slots(child, rng)
                nxt[filled, :] = child
                nxt_fit[filled] = fitness_seq(prio, rehandles, child)
                filled += 1
        pop[:, :] = nxt
        fit[:] = nxt_fit
        evals += size - 1
        gen_best = fit[argmin_first(fit)]
        if gen_best < best:
            best = gen_best
            stagnation = 0
        else:
            stagnation += 1
        history[count] = best
        count += 1
    return count, stagnation, best, evals, done
