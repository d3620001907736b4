# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled collapsed Gibbs sweep.

Mirrors _gibbs_py.sweep operation for operation (same splitmix64 stream,
same order of floating-point operations) so the two kernels produce
bit-identical chains.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()

cdef extern from *:
    """
    #include <stdint.h>
    static inline uint64_t esp_splitmix64(uint64_t *state) {
        uint64_t z = (*state += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }
    static inline double esp_next_double(uint64_t *state) {
        return (esp_splitmix64(state) >> 11) * (1.0 / 9007199254740992.0);
    }
    """
    cnp.uint64_t esp_splitmix64(cnp.uint64_t *state) nogil
    double esp_next_double(cnp.uint64_t *state) nogil


def sweep(cnp.int32_t[::1] z,
          cnp.int32_t[::1] doc_ids,
          cnp.int32_t[::1] word_ids,
          cnp.float64_t[:, ::1] n_tw,
          cnp.float64_t[::1] n_t,
          cnp.float64_t[:, ::1] n_dt,
          double alpha,
          double beta,
          object state):
    """One full resampling pass; counts updated in place. Returns new state."""
    cdef Py_ssize_t n_tokens = z.shape[0]
    cdef Py_ssize_t n_topics = n_tw.shape[0]
    cdef double v_beta = n_tw.shape[1] * beta
    cdef cnp.uint64_t rng = <cnp.uint64_t> (<object> state)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] cum_arr = np.empty(n_topics, dtype=np.float64)
    cdef cnp.float64_t[::1] cum = cum_arr
    cdef Py_ssize_t i, t
    cdef cnp.int32_t t_old, t_new, d, w
    cdef double acc, r

    with nogil:
        for i in range(n_tokens):
            t_old = z[i]
            d = doc_ids[i]
            w = word_ids[i]
            n_tw[t_old, w] -= 1.0
            n_t[t_old] -= 1.0
            n_dt[d, t_old] -= 1.0

            acc = 0.0
            for t in range(n_topics):
                acc += (n_tw[t, w] + beta) * (n_dt[d, t] + alpha) / (n_t[t] + v_beta)
                cum[t] = acc
            r = esp_next_double(&rng) * cum[n_topics - 1]
            t_new = <cnp.int32_t> (n_topics - 1)
            for t in range(n_topics):
                if cum[t] > r:
                    t_new = <cnp.int32_t> t
                    break

            z[i] = t_new
            n_tw[t_new, w] += 1.0
            n_t[t_new] += 1.0
            n_dt[d, t_new] += 1.0
    return int(rng)


KERNEL_NAME = "cython"
