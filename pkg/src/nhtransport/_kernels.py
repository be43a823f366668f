"""Compiled propagation kernels.

Both kernels integrate d(phi)/dt = -i H phi with the classical fourth-order
Runge-Kutta step. For a time-independent linear system that step equals the
degree-4 Taylor polynomial of exp(-i H dt), evaluated here in Horner form so
only one work vector is needed. The state is renormalized after every step and
the log of the discarded norm is accumulated. Components below ``TINY`` are
flushed to zero: they are far below double-precision significance relative to
the unit-norm state, and subnormal arithmetic would otherwise dominate the run
time under strong localization.

Return convention: ``status`` is -1 on success, otherwise the global index of
the step at which the norm stopped being finite and positive.
"""
import numba as nb
import numpy as np

TINY = 1e-300


@nb.njit(cache=True, nogil=True)
def _stencil_apply(diag, nx, ny, t0, v, out):
    for x in range(nx):
        base = x * ny
        for y in range(ny):
            i = base + y
            acc = diag[i] * v[i]
            if x > 0:
                acc += t0 * v[i - ny]
            if x < nx - 1:
                acc += t0 * v[i + ny]
            if y > 0:
                acc += t0 * v[i - 1]
            if y < ny - 1:
                acc += t0 * v[i + 1]
            out[i] = acc


@nb.njit(cache=True, nogil=True)
def _csr_apply(diag, indptr, indices, data, v, out):
    n = v.size
    for i in range(n):
        acc = diag[i] * v[i]
        for k in range(indptr[i], indptr[i + 1]):
            acc += data[k] * v[indices[k]]
        out[i] = acc


@nb.njit(cache=True, nogil=True)
def _step_counts(times, dt_max):
    counts = np.zeros(times.size, np.int64)
    prev = 0.0
    for k in range(times.size):
        span = times[k] - prev
        if span > 0.0:
            counts[k] = int(np.ceil(span / dt_max - 1e-9))
            if counts[k] < 1:
                counts[k] = 1
        prev = times[k]
    return counts


@nb.njit(cache=True, nogil=True)
def rk4_stencil(diag, nx, ny, t0, phi, dt_max, times):
    n = phi.size
    states = np.empty((times.size, n), np.complex128)
    log_norms = np.empty(times.size)
    work = np.empty(n, np.complex128)
    acc = np.empty(n, np.complex128)
    counts = _step_counts(times, dt_max)
    prev = 0.0
    log_norm = 0.0
    step = 0
    for k in range(times.size):
        if counts[k] > 0:
            h = (times[k] - prev) / counts[k]
            for _ in range(counts[k]):
                for i in range(n):
                    acc[i] = phi[i]
                for order in range(4, 0, -1):
                    _stencil_apply(diag, nx, ny, t0, acc, work)
                    c = -1j * h / order
                    for i in range(n):
                        acc[i] = phi[i] + c * work[i]
                nrm2 = 0.0
                for i in range(n):
                    nrm2 += acc[i].real * acc[i].real + acc[i].imag * acc[i].imag
                if not (nrm2 > 0.0 and nrm2 < np.inf):
                    return states, log_norms, step
                nrm = np.sqrt(nrm2)
                inv = 1.0 / nrm
                for i in range(n):
                    re = acc[i].real * inv
                    im = acc[i].imag * inv
                    if abs(re) < TINY:
                        re = 0.0
                    if abs(im) < TINY:
                        im = 0.0
                    phi[i] = complex(re, im)
                log_norm += np.log(nrm)
                step += 1
        prev = times[k]
        states[k] = phi
        log_norms[k] = log_norm
    return states, log_norms, -1


@nb.njit(cache=True, nogil=True)
def rk4_csr(diag, indptr, indices, data, phi, dt_max, times):
    n = phi.size
    states = np.empty((times.size, n), np.complex128)
    log_norms = np.empty(times.size)
    work = np.empty(n, np.complex128)
    acc = np.empty(n, np.complex128)
    counts = _step_counts(times, dt_max)
    prev = 0.0
    log_norm = 0.0
    step = 0
    for k in range(times.size):
        if counts[k] > 0:
            h = (times[k] - prev) / counts[k]
            for _ in range(counts[k]):
                for i in range(n):
                    acc[i] = phi[i]
                for order in range(4, 0, -1):
                    _csr_apply(diag, indptr, indices, data, acc, work)
                    c = -1j * h / order
                    for i in range(n):
                        acc[i] = phi[i] + c * work[i]
                nrm2 = 0.0
                for i in range(n):
                    nrm2 += acc[i].real * acc[i].real + acc[i].imag * acc[i].imag
                if not (nrm2 > 0.0 and nrm2 < np.inf):
                    return states, log_norms, step
                nrm = np.sqrt(nrm2)
                inv = 1.0 / nrm
                for i in range(n):
                    re = acc[i].real * inv
                    im = acc[i].imag * inv
                    if abs(re) < TINY:
                        re = 0.0
                    if abs(im) < TINY:
                        im = 0.0
                    phi[i] = complex(re, im)
                log_norm += np.log(nrm)
                step += 1
        prev = times[k]
        states[k] = phi
        log_norms[k] = log_norm
    return states, log_norms, -1
