"""Independent high-precision Mie series built directly on mpmath Bessel functions."""

import math

import mpmath as mp


def mie_reference(x, m, dps=30):
    """(Q_ext, Q_sca, Q_back) at size parameter ``x`` and index ``m``."""
    with mp.workdps(dps):
        x = mp.mpf(x)
        m = mp.mpc(m)
        mx = m * x

        def psi(n, z):
            return z * mp.sqrt(mp.pi / (2 * z)) * mp.besselj(n + mp.mpf(1) / 2, z)

        def chi(n, z):
            return -z * mp.sqrt(mp.pi / (2 * z)) * mp.bessely(n + mp.mpf(1) / 2, z)

        nmax = math.ceil(float(x) + 4 * float(x) ** (1 / 3) + 2) + 15
        ext = sca = mp.mpf(0)
        back = mp.mpc(0)
        psi_prev, chi_prev = psi(0, x), chi(0, x)
        psim_prev = psi(0, mx)
        for n in range(1, nmax + 1):
            ps, ch = psi(n, x), chi(n, x)
            psim = psi(n, mx)
            dn = psim_prev / psim - n / mx  # D_n = psi_{n-1}/psi_n - n/z
            xi, xi_prev = ps - 1j * ch, psi_prev - 1j * chi_prev
            a = ((dn / m + n / x) * ps - psi_prev) / ((dn / m + n / x) * xi - xi_prev)
            b = ((dn * m + n / x) * ps - psi_prev) / ((dn * m + n / x) * xi - xi_prev)
            ext += (2 * n + 1) * mp.re(a + b)
            sca += (2 * n + 1) * (abs(a) ** 2 + abs(b) ** 2)
            back += (2 * n + 1) * (-1) ** n * (a - b)
            psi_prev, chi_prev, psim_prev = ps, ch, psim
        return (
            float(2 * ext / x**2),
            float(2 * sca / x**2),
            float(abs(back) ** 2 / x**2),
        )
