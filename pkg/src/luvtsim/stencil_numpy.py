"""Pure-NumPy stencil kernels: fallback when the compiled extension is absent.

Both backends implement the same two in-place passes of the velocity-stress
leapfrog on the staggered grid (stresses at cell centers, sxz at corners,
vx on x-faces, vz on z-faces). Stresses outside the grid are zero (vacuum),
so boundary faces use one-sided differences; corner shear points carry
mu_c = 0 on every traction-free boundary and stay identically zero.
"""

import numpy as np


def update_velocity(vx, vz, sxx, szz, sxz, bx, bz, dtx):
    """Advance particle velocities one time step from the stress divergence."""
    vx[:, 1:-1] += dtx * bx[:, 1:-1] * (
        (sxx[:, 1:] - sxx[:, :-1]) + (sxz[1:, 1:-1] - sxz[:-1, 1:-1])
    )
    vx[:, 0] += dtx * bx[:, 0] * (sxx[:, 0] + (sxz[1:, 0] - sxz[:-1, 0]))
    vx[:, -1] += dtx * bx[:, -1] * (-sxx[:, -1] + (sxz[1:, -1] - sxz[:-1, -1]))

    vz[1:-1, :] += dtx * bz[1:-1, :] * (
        (szz[1:, :] - szz[:-1, :]) + (sxz[1:-1, 1:] - sxz[1:-1, :-1])
    )
    vz[0, :] += dtx * bz[0, :] * (szz[0, :] + (sxz[0, 1:] - sxz[0, :-1]))
    vz[-1, :] += dtx * bz[-1, :] * (-szz[-1, :] + (sxz[-1, 1:] - sxz[-1, :-1]))


def update_stress(sxx, szz, sxz, vx, vz, lam, lam2mu, mu_c, dtx):
    """Advance stresses one time step from the velocity gradients."""
    dvx = vx[:, 1:] - vx[:, :-1]
    dvz = vz[1:, :] - vz[:-1, :]
    sxx += dtx * (lam2mu * dvx + lam * dvz)
    szz += dtx * (lam * dvx + lam2mu * dvz)
    sxz[1:-1, 1:-1] += dtx * mu_c[1:-1, 1:-1] * (
        (vx[1:, 1:-1] - vx[:-1, 1:-1]) + (vz[1:-1, 1:] - vz[1:-1, :-1])
    )


def scale_fields(arrays, masks):
    """Multiply each field array by its sponge damping mask."""
    for arr, mask in zip(arrays, masks):
        np.multiply(arr, mask, out=arr)
