# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loop of the time-domain solver.

Mirrors ``_propagate_py.propagate`` exactly; see that module for the scheme.
"""
import numpy as np
cimport numpy as cnp

cnp.import_array()


def propagate(const double complex[::1] in_r, const double complex[::1] in_l,
              const double complex[:, ::1] eh, double kick_a, double complex kick_b,
              double complex jump, double complex ec0, double complex ea0):
    cdef Py_ssize_t n = in_r.shape[0]
    cdef Py_ssize_t k
    out_r_arr = np.empty(n, dtype=np.complex128)
    out_l_arr = np.empty(n, dtype=np.complex128)
    ec_mid_arr = np.empty(n, dtype=np.complex128)
    ea_mid_arr = np.empty(n, dtype=np.complex128)
    ec_end_arr = np.empty(n, dtype=np.complex128)
    ea_end_arr = np.empty(n, dtype=np.complex128)
    cdef double complex[::1] out_r = out_r_arr
    cdef double complex[::1] out_l = out_l_arr
    cdef double complex[::1] ec_mid = ec_mid_arr
    cdef double complex[::1] ea_mid = ea_mid_arr
    cdef double complex[::1] ec_end = ec_end_arr
    cdef double complex[::1] ea_end = ea_end_arr
    cdef double complex e00 = eh[0, 0], e01 = eh[0, 1], e10 = eh[1, 0], e11 = eh[1, 1]
    cdef double complex ec = ec0, ea = ea0, tmp, s, ec_new, m

    with nogil:
        for k in range(n):
            tmp = e00 * ec + e01 * ea
            ea = e10 * ec + e11 * ea
            ec = tmp
            s = in_r[k] + in_l[k]
            ec_new = kick_a * ec + kick_b * s
            m = 0.5 * (ec + ec_new)
            out_r[k] = in_r[k] + jump * m
            out_l[k] = in_l[k] + jump * m
            ec_mid[k] = m
            ea_mid[k] = ea
            ec = ec_new
            tmp = e00 * ec + e01 * ea
            ea = e10 * ec + e11 * ea
            ec = tmp
            ec_end[k] = ec
            ea_end[k] = ea

    return out_r_arr, out_l_arr, ec_mid_arr, ea_mid_arr, ec_end_arr, ea_end_arr
