# cython: language_level=3
# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled gather/scatter kernels; float accumulation order matches kernels.py."""
import numpy as np

cimport numpy as cnp

cnp.import_array()


def gather_concat(cnp.float64_t[:, ::1] h, cnp.float64_t[:, ::1] e,
                  cnp.int64_t[::1] src, cnp.int64_t[::1] dst):
    cdef Py_ssize_t num_edges = src.shape[0]
    cdef Py_ssize_t dh = h.shape[1]
    cdef Py_ssize_t de = e.shape[1]
    out_arr = np.empty((num_edges, 2 * dh + de), dtype=np.float64)
    cdef cnp.float64_t[:, ::1] out = out_arr
    cdef Py_ssize_t k, c, i, j
    for k in range(num_edges):
        i = dst[k]
        j = src[k]
        for c in range(dh):
            out[k, c] = h[i, c]
        for c in range(dh):
            out[k, dh + c] = h[j, c]
        for c in range(de):
            out[k, 2 * dh + c] = e[k, c]
    return out_arr


def gather_concat_backward(cnp.float64_t[:, ::1] grad_rows, Py_ssize_t num_nodes,
                           Py_ssize_t node_dim, cnp.int64_t[::1] src,
                           cnp.int64_t[::1] dst):
    cdef Py_ssize_t num_edges = src.shape[0]
    cdef Py_ssize_t edge_dim = grad_rows.shape[1] - 2 * node_dim
    grad_h_arr = np.zeros((num_nodes, node_dim), dtype=np.float64)
    grad_e_arr = np.empty((num_edges, edge_dim), dtype=np.float64)
    cdef cnp.float64_t[:, ::1] grad_h = grad_h_arr
    cdef cnp.float64_t[:, ::1] grad_e = grad_e_arr
    cdef Py_ssize_t k, c
    # all dst contributions first, then all src, mirroring the numpy fallback
    for k in range(num_edges):
        for c in range(node_dim):
            grad_h[dst[k], c] += grad_rows[k, c]
    for k in range(num_edges):
        for c in range(node_dim):
            grad_h[src[k], c] += grad_rows[k, node_dim + c]
    for k in range(num_edges):
        for c in range(edge_dim):
            grad_e[k, c] = grad_rows[k, 2 * node_dim + c]
    return grad_h_arr, grad_e_arr


def segment_sum(cnp.float64_t[:, ::1] values, cnp.int64_t[::1] segment_ids,
                Py_ssize_t num_segments):
    cdef Py_ssize_t n = values.shape[0]
    cdef Py_ssize_t d = values.shape[1]
    out_arr = np.zeros((num_segments, d), dtype=np.float64)
    cdef cnp.float64_t[:, ::1] out = out_arr
    cdef Py_ssize_t k, c
    for k in range(n):
        for c in range(d):
            out[segment_ids[k], c] += values[k, c]
    return out_arr
