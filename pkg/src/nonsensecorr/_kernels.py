"""Compiled inner loops for the MCMC samplers.

Kernels never draw random numbers themselves: callers pass buffers of
uniforms produced by a ``numpy.random.Generator`` so that every chain is a
pure function of its seed, regardless of which thread runs it.
"""

import numpy as np
from numba import njit


@njit(cache=True, nogil=True)
def wolff_clusters(spins, indptr, indices, p_add, uniforms, pos, max_clusters,
                   stack, record_every, offset, out, n_out):
    """Grow and flip up to ``max_clusters`` Wolff clusters.

    ``p_add[e]`` is the activation probability of CSR edge ``e``. A cluster
    is only started when at least ``len(indices) + 1`` uniforms remain, so a
    cluster never runs out of randomness half way. When ``record_every > 0``
    the state is copied into ``out`` whenever ``offset + clusters_done`` is a
    multiple of ``record_every``.

    Returns ``(clusters_done, new_pos, flipped_volume, n_out)``.
    """
    n = spins.shape[0]
    need = indices.shape[0] + 1
    done = 0
    volume = 0
    total = uniforms.shape[0]
    while done < max_clusters and total - pos >= need:
        seed = int(uniforms[pos] * n)
        pos += 1
        if seed >= n:
            seed = n - 1
        s0 = spins[seed]
        spins[seed] = -s0
        top = 0
        stack[top] = seed
        top += 1
        volume += 1
        while top > 0:
            top -= 1
            i = stack[top]
            for e in range(indptr[i], indptr[i + 1]):
                j = indices[e]
                if spins[j] == s0:
                    u = uniforms[pos]
                    pos += 1
                    if u < p_add[e]:
                        spins[j] = -s0
                        stack[top] = j
                        top += 1
                        volume += 1
        done += 1
        if record_every > 0 and (offset + done) % record_every == 0 and n_out < out.shape[0]:
            out[n_out, :] = spins
            n_out += 1
    return done, pos, volume, n_out


@njit(cache=True, nogil=True)
def local_fields(spins, indptr, indices, couplings):
    n = spins.shape[0]
    h = np.zeros(n)
    for i in range(n):
        acc = 0.0
        for e in range(indptr[i], indptr[i + 1]):
            acc += couplings[e] * spins[indices[e]]
        h[i] = acc
    return h


@njit(cache=True, nogil=True)
def heat_bath_sweeps(spins, field, indptr, indices, couplings, orders, uniforms,
                     record_every, out, n_out):
    """Run ``orders.shape[0]`` heat-bath sweeps in place.

    ``field[i] = sum_j K_ij x_j`` (coupling already multiplied by beta) is
    kept current after every flip. Site ``i`` becomes +1 with probability
    ``1 / (1 + exp(-2 field[i]))``.
    """
    n_sweeps, n = orders.shape
    for s in range(n_sweeps):
        for k in range(n):
            i = orders[s, k]
            p_plus = 1.0 / (1.0 + np.exp(-2.0 * field[i]))
            new = 1 if uniforms[s, k] < p_plus else -1
            old = spins[i]
            if new != old:
                spins[i] = new
                delta = 2.0 * new
                for e in range(indptr[i], indptr[i + 1]):
                    field[indices[e]] += couplings[e] * delta
        if record_every > 0 and (s + 1) % record_every == 0 and n_out < out.shape[0]:
            out[n_out, :] = spins
            n_out += 1
    return n_out
