"""Independent reference implementations used by the test suite.

Everything here deliberately avoids the library's own code paths for the
quantity being checked: Bessel ratios come from brute-force trapezoid
quadrature of the integral representation, the closure moments from
fixed-grid Simpson integration, local means from an O(N^2) all-pairs sweep,
and flux Jacobians from central finite differences of a separate flux
formula.  The frozen reference constants were computed offline with a
50-digit arbitrary-precision evaluation of the same integrals.
"""

import numpy as np
from scipy.integrate import cumulative_simpson, simpson

# ---------------------------------------------------------------------------
# frozen high-precision reference values
# ---------------------------------------------------------------------------

C1_REF = {
    0.5: 0.24249961258080195,
    1.0: 0.44638996589653451,
    4.0: 0.86352261102455058,
    8.0: 0.93523549352943861,
    16.0: 0.96822775542815993,
}

K1_REF = {
    0.5: 0.4632970512226,
    1.0: 0.3761396395679,
    4.0: 0.06201069978158,
    8.0: 0.01562491452925,
}

K2_REF = {
    0.5: 0.04340434787812,
    1.0: 0.0702503263286,
    4.0: 0.03846748824364,
    8.0: 0.01265994027024,
}

C2_REF = {
    0.5: 0.09368578488378,
    1.0: 0.186766612552,
    4.0: 0.620336302914,
    8.0: 0.8102406094154394,
}


# ---------------------------------------------------------------------------
# Bessel / c1
# ---------------------------------------------------------------------------

def bessel_trapezoid(order: int, x: float, panels: int = 1_000_000) -> float:
    """I_order(x) from the integral representation, composite trapezoid.

    I_m(x) = (1/pi) * Int_0^pi exp(x cos t) cos(m t) dt.  The integrand is
    smooth and periodic-extendable, so the trapezoid rule converges
    spectrally; 1e6 panels is vast overkill and serves as a genuinely
    independent check.
    """
    t = np.linspace(0.0, np.pi, panels + 1)
    f = np.exp(x * np.cos(t)) * np.cos(order * t)
    return float(np.trapezoid(f, t) / np.pi)


def c1_trapezoid(kappa: float, panels: int = 1_000_000) -> float:
    """c1 = I1(kappa)/I0(kappa) with both factors from the trapezoid rule."""
    t = np.linspace(0.0, np.pi, panels + 1)
    # shared exponential; scaling by exp(-kappa) cancels in the ratio and
    # keeps the intermediates comfortably in range
    e = np.exp(kappa * (np.cos(t) - 1.0))
    i0 = np.trapezoid(e, t)
    i1 = np.trapezoid(e * np.cos(t), t)
    return float(i1 / i0)


# ---------------------------------------------------------------------------
# closure moments K1, K2 via fixed-grid Simpson
# ---------------------------------------------------------------------------

def _g_on_grid(kappa: float, theta: np.ndarray) -> np.ndarray:
    """g(theta) on a uniform grid via cumulative Simpson for the inner
    integral F(t) = Int_0^t exp(-kappa cos phi) dphi."""
    f = np.exp(-kappa * np.cos(theta))
    F = cumulative_simpson(f, x=theta, initial=0.0)
    return (theta - np.pi * F / F[-1]) / kappa


def simpson_K1_K2(kappa: float, nodes: int = 16385) -> tuple[float, float]:
    """(K1, K2) on [0, pi] doubled (both integrands are even)."""
    theta = np.linspace(0.0, np.pi, nodes)
    g = _g_on_grid(kappa, theta)
    # von Mises density centered at 0, normalized over (-pi, pi]
    w = np.exp(kappa * (np.cos(theta) - 1.0))
    norm = 2.0 * simpson(w, x=theta)
    dens = w / norm
    K1 = 2.0 * simpson(np.sin(theta) * dens * g, x=theta)
    K2 = 2.0 * simpson(np.cos(theta) * np.sin(theta) * dens * g, x=theta)
    return float(K1), float(K2)


# ---------------------------------------------------------------------------
# all-pairs local means
# ---------------------------------------------------------------------------

def brute_local_means(x, y, theta, omega, R: float, L: float):
    """O(N^2) neighborhood averages, self included.

    Minimum-image metric on the L-periodic square; flat kernel 1/(pi R^2)
    on |r| <= R.  Returns (Jx, Jy, omega_bar, count) where J carries the
    kernel weight and the 1/N normalization and omega_bar is the plain
    neighborhood mean frequency.
    """
    x = np.asarray(x)
    dx = x[:, None] - x[None, :]
    dx -= L * np.round(dx / L)
    dy = np.asarray(y)[:, None] - np.asarray(y)[None, :]
    dy -= L * np.round(dy / L)
    mask = dx * dx + dy * dy <= R * R
    w = 1.0 / (np.pi * R * R)
    n = x.size
    jx = (mask * np.cos(theta)[None, :]).sum(axis=1) * w / n
    jy = (mask * np.sin(theta)[None, :]).sum(axis=1) * w / n
    cnt = mask.sum(axis=1)
    om = (mask * np.asarray(omega)[None, :]).sum(axis=1) / cnt
    return jx, jy, om, cnt


# ---------------------------------------------------------------------------
# flux Jacobian by central differences
# ---------------------------------------------------------------------------

def flux_reference(U, c1: float, c2: float, lam: float) -> np.ndarray:
    """Normal flux of U = (rho, m_omega, m_n, m_t), written independently."""
    rho, m_om, m_n, m_t = U
    v = m_n / rho
    return np.array([
        c1 * m_n,
        c1 * m_om * v,
        c2 * m_n * v + lam * rho,
        c2 * m_t * v,
    ])


def fd_flux_jacobian(U, c1: float, c2: float, lam: float,
                     eps: float = 1e-7) -> np.ndarray:
    """Central finite-difference Jacobian dF/dU at the state U."""
    U = np.asarray(U, dtype=np.float64)
    J = np.empty((4, 4))
    for j in range(4):
        h = eps * max(1.0, abs(U[j]))
        Up, Um = U.copy(), U.copy()
        Up[j] += h
        Um[j] -= h
        J[:, j] = (flux_reference(Up, c1, c2, lam)
                   - flux_reference(Um, c1, c2, lam)) / (2.0 * h)
    return J
