# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled stencil kernels for the velocity-stress leapfrog.

Element-for-element identical arithmetic to stencil_numpy (same operation
order), just run in tight typed loops.
"""


def update_velocity(double[:, ::1] vx, double[:, ::1] vz,
                    double[:, ::1] sxx, double[:, ::1] szz, double[:, ::1] sxz,
                    double[:, ::1] bx, double[:, ::1] bz, double dtx):
    cdef Py_ssize_t nz = sxx.shape[0]
    cdef Py_ssize_t nx = sxx.shape[1]
    cdef Py_ssize_t i, j

    for j in range(nz):
        vx[j, 0] += dtx * bx[j, 0] * (sxx[j, 0] + (sxz[j + 1, 0] - sxz[j, 0]))
        for i in range(1, nx):
            vx[j, i] += dtx * bx[j, i] * (
                (sxx[j, i] - sxx[j, i - 1]) + (sxz[j + 1, i] - sxz[j, i])
            )
        vx[j, nx] += dtx * bx[j, nx] * (-sxx[j, nx - 1] + (sxz[j + 1, nx] - sxz[j, nx]))

    for i in range(nx):
        vz[0, i] += dtx * bz[0, i] * (szz[0, i] + (sxz[0, i + 1] - sxz[0, i]))
    for j in range(1, nz):
        for i in range(nx):
            vz[j, i] += dtx * bz[j, i] * (
                (szz[j, i] - szz[j - 1, i]) + (sxz[j, i + 1] - sxz[j, i])
            )
    for i in range(nx):
        vz[nz, i] += dtx * bz[nz, i] * (-szz[nz - 1, i] + (sxz[nz, i + 1] - sxz[nz, i]))


def update_stress(double[:, ::1] sxx, double[:, ::1] szz, double[:, ::1] sxz,
                  double[:, ::1] vx, double[:, ::1] vz,
                  double[:, ::1] lam, double[:, ::1] lam2mu, double[:, ::1] mu_c,
                  double dtx):
    cdef Py_ssize_t nz = sxx.shape[0]
    cdef Py_ssize_t nx = sxx.shape[1]
    cdef Py_ssize_t i, j
    cdef double dvx, dvz

    for j in range(nz):
        for i in range(nx):
            dvx = vx[j, i + 1] - vx[j, i]
            dvz = vz[j + 1, i] - vz[j, i]
            sxx[j, i] += dtx * (lam2mu[j, i] * dvx + lam[j, i] * dvz)
            szz[j, i] += dtx * (lam[j, i] * dvx + lam2mu[j, i] * dvz)

    for j in range(1, nz):
        for i in range(1, nx):
            sxz[j, i] += dtx * mu_c[j, i] * (
                (vx[j, i] - vx[j - 1, i]) + (vz[j, i] - vz[j, i - 1])
            )


def scale_fields(arrays, masks):
    cdef double[:, ::1] arr
    cdef double[:, ::1] mask
    cdef Py_ssize_t i, j
    for a, m in zip(arrays, masks):
        arr = a
        mask = m
        for j in range(arr.shape[0]):
            for i in range(arr.shape[1]):
                arr[j, i] *= mask[j, i]
