"""Analytical magnetostatics of the slotless tubular PM generator.

The radially magnetized rings are expanded in odd axial harmonics over
the pole-pair period 2 tau_p. Each harmonic of the vector potential
solves a modified Bessel equation: the magnet annulus carries a
particular solution built from the modified Struve function, the
airgap+winding annulus is source free, and the iron at the back-iron
and stator-yoke radii enters as infinitely permeable walls. With the
yoke removed the outer wall is replaced by a decay condition.

Thrust and EMF follow from the same coupling integral of the radial
field over the coil rectangles (one coil per phase per pole, tau_p/3
wide), with the end poles tapered linearly over one pole pitch to
stand in for the fringing of a finite translator. Everything is linear
in remanence and current, which is what makes the sweep layer cheap.
"""

import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy import special

from .errors import NumericError, ValidationError

MU0 = 4e-7 * math.pi

GRADE_REMANENCE = {"N50": 1.40, "N42": 1.30}

RATED_J_RMS = 5e6  # A/m^2, rated winding current density

SHAFT_R_MIN = 0.050  # m, deflection limit for the translator shaft
OUTER_R_MAX = 0.105  # m, fits inside the tube

_GEOM_TOL = 1e-9


def awg_area(gauge: int) -> float:
    """Bare-copper cross section of an AWG wire gauge, m^2."""
    d = 0.127e-3 * 92.0 ** ((36 - gauge) / 39.0)
    return 0.25 * math.pi * d * d


@dataclass(frozen=True)
class GeneratorGeometry:
    """Radial build and axial layout of the tubular machine (SI units).

    r0/rm/ri/rs/re are the back-iron, magnet, coil-inner, coil-outer,
    and overall outer radii; g the airgap; le the translator length;
    tau_p the pole pitch. The thickness fields must agree with the
    radii (see validate_geometry).
    """

    r0: float
    rm: float
    ri: float
    rs: float
    re: float
    g: float
    le: float
    poles: int
    tau_p: float
    shaft_r: float
    yoke_t: float
    backiron_t: float

    @classmethod
    def from_thicknesses(
        cls,
        shaft_r: float,
        backiron_t: float,
        magnet_t: float,
        airgap: float,
        winding_t: float,
        yoke_t: float,
        poles: int,
        tau_p: float,
    ) -> "GeneratorGeometry":
        r0 = shaft_r + backiron_t
        rm = r0 + magnet_t
        ri = rm + airgap
        rs = ri + winding_t
        return cls(
            r0=r0, rm=rm, ri=ri, rs=rs, re=rs + yoke_t,
            g=airgap, le=poles * tau_p, poles=poles, tau_p=tau_p,
            shaft_r=shaft_r, yoke_t=yoke_t, backiron_t=backiron_t,
        )

    @property
    def magnet_t(self) -> float:
        return self.rm - self.r0

    @property
    def winding_t(self) -> float:
        return self.rs - self.ri

    @property
    def coil_width(self) -> float:
        return self.tau_p / 3.0


def _structural_violations(geom: GeneratorGeometry) -> list[str]:
    v = []
    if not 0.0 < geom.r0 < geom.rm < geom.ri < geom.rs:
        v.append("radial ordering must satisfy 0 < r0 < rm < ri < rs")
    if geom.rs > geom.re + _GEOM_TOL:
        v.append("coil outer radius exceeds the overall outer radius")
    if abs(geom.ri - (geom.rm + geom.g)) > _GEOM_TOL:
        v.append("airgap inconsistent: ri must equal rm + g")
    if abs(geom.re - (geom.rs + geom.yoke_t)) > _GEOM_TOL:
        v.append("yoke inconsistent: re must equal rs + yoke_t")
    if abs(geom.r0 - (geom.shaft_r + geom.backiron_t)) > _GEOM_TOL:
        v.append("back iron inconsistent: r0 must equal shaft_r + backiron_t")
    if geom.poles < 2 or geom.poles % 2:
        v.append("pole count must be an even integer >= 2")
    if geom.tau_p <= 0.0:
        v.append("pole pitch must be positive")
    if abs(geom.le - geom.poles * geom.tau_p) > _GEOM_TOL:
        v.append("length inconsistent: le must equal poles * tau_p")
    return v


def validate_geometry(geom: GeneratorGeometry) -> list[str]:
    """Feasibility check; returns human-readable violations (empty = feasible)."""
    v = _structural_violations(geom)
    if geom.shaft_r < SHAFT_R_MIN - _GEOM_TOL:
        v.append(f"shaft radius {geom.shaft_r * 1e3:.1f} mm below 50 mm minimum")
    if geom.re > OUTER_R_MAX + _GEOM_TOL:
        v.append(f"outer radius {geom.re * 1e3:.1f} mm exceeds 105 mm")
    return v


@dataclass(frozen=True)
class MagnetSpec:
    """Permanent-magnet grade: remanence and relative recoil permeability."""

    br: float
    mu_r: float = 1.05

    def __post_init__(self):
        if not 0.0 <= self.br <= 1.5:
            raise ValidationError(f"remanence {self.br} T outside [0, 1.5] T")
        if not 0.9 <= self.mu_r <= 1.2:
            raise ValidationError(f"recoil permeability {self.mu_r} outside [0.9, 1.2]")

    @classmethod
    def from_grade(cls, grade: str, mu_r: float = 1.05) -> "MagnetSpec":
        try:
            br = GRADE_REMANENCE[grade.upper()]
        except KeyError:
            raise ValidationError(
                f"unknown magnet grade {grade!r}; known: {sorted(GRADE_REMANENCE)}"
            ) from None
        return cls(br=br, mu_r=mu_r)


@dataclass(frozen=True)
class WindingSpec:
    """Coil winding data; one coil per phase per pole."""

    turns_per_coil: int
    wire_area: float
    fill: float = 0.75
    j_rms: float = RATED_J_RMS
    coils_per_pole_per_phase: int = 1

    def __post_init__(self):
        if self.turns_per_coil < 0:
            raise ValidationError("turns_per_coil must be >= 0")
        if not self.wire_area > 0.0:
            raise ValidationError("wire_area must be positive")
        if not 0.0 < self.fill <= 1.0:
            raise ValidationError("fill factor must be in (0, 1]")
        if self.j_rms < 0.0:
            raise ValidationError("j_rms must be >= 0")
        if self.coils_per_pole_per_phase != 1:
            raise ValidationError("only one coil per phase per pole is supported")


def turns_for(width: float, thickness: float, fill: float, wire_area: float) -> int:
    """Whole turns that fit a width x thickness coil window at the given fill."""
    if width <= 0.0 or thickness <= 0.0:
        raise ValidationError("coil window dimensions must be positive")
    if not 0.0 < fill <= 1.0:
        raise ValidationError("fill factor must be in (0, 1]")
    if wire_area <= 0.0:
        raise ValidationError("wire area must be positive")
    # relative epsilon so an exactly back-solved window is not rounded down
    return int(math.floor(width * thickness * fill / wire_area * (1.0 + 1e-9)))


def _bessel_struve_diff(nu: int, x: np.ndarray) -> np.ndarray:
    """D_nu(x) = L_nu(x) - I_nu(x), stable for large x.

    Below x = 25 the difference is computed directly; above, both terms
    grow like e^x and cancel catastrophically, so the asymptotic series
    of the difference is used instead (crossover agreement ~1e-6).
    """
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    small = x < 25.0
    if small.any():
        xs = x[small]
        out[small] = special.modstruve(nu, xs) - special.iv(nu, xs)
    if (~small).any():
        z = x[~small]
        z2 = z * z
        if nu == 0:
            out[~small] = -(2.0 / np.pi) * (1.0 / z + 1.0 / (z * z2) + 9.0 / (z * z2 * z2))
        else:
            out[~small] = -(2.0 / np.pi) * (1.0 - 1.0 / z2 - 3.0 / (z2 * z2) - 45.0 / (z2 * z2 * z2))
    return out


@dataclass(frozen=True)
class FieldSolution:
    """Per-harmonic field coefficients and evaluators for the winding region.

    Coefficients are stored against exponentially scaled Bessel factors
    (anchored at the region boundaries) so deep geometries at high
    harmonic order stay finite. b_r/b_z/a_phi evaluate in region II,
    from the magnet surface outward (to the yoke, or to infinity when
    the solution was built without one).
    """

    geom: GeneratorGeometry
    magnet: MagnetSpec
    orders: np.ndarray
    m: np.ndarray
    yoked: bool
    _a: np.ndarray
    _b: np.ndarray
    _c: np.ndarray
    _d: np.ndarray

    def _check_radius(self, r: np.ndarray) -> None:
        # small slack so difference stencils can straddle the boundaries
        tol = 1e-7 + 1e-9 * self.geom.rs
        if np.any(r < self.geom.rm - tol):
            raise ValidationError("field evaluation below the magnet surface")
        if self.yoked and np.any(r > self.geom.rs + tol):
            raise ValidationError("field evaluation beyond the stator yoke")

    def _region2(self, r: np.ndarray):
        """Radial profiles (C_a, C_r, C_z) of shape (n_harmonics, r.size)."""
        x = self.m[:, None] * r[None, :]
        xm = self.m[:, None] * self.geom.rm
        xs = self.m[:, None] * self.geom.rs
        k1 = special.kve(1, x) * np.exp(xm - x)
        k0 = special.kve(0, x) * np.exp(xm - x)
        if self.yoked:
            i1 = special.ive(1, x) * np.exp(x - xs)
            i0 = special.ive(0, x) * np.exp(x - xs)
        else:
            i1 = i0 = np.zeros_like(x)
        c = self._c[:, None]
        d = self._d[:, None]
        c_a = c * i1 + d * k1
        c_r = self.m[:, None] * c_a
        c_z = self.m[:, None] * (c * i0 - d * k0)
        return c_a, c_r, c_z

    def _eval(self, r, z, which: str) -> np.ndarray:
        r_b, z_b = np.broadcast_arrays(np.asarray(r, dtype=float), np.asarray(z, dtype=float))
        shape = r_b.shape
        r_f = np.ravel(r_b)
        z_f = np.ravel(z_b)
        self._check_radius(r_f)
        c_a, c_r, c_z = self._region2(r_f)
        phase = self.m[:, None] * z_f[None, :]
        if which == "br":
            out = (c_r * np.sin(phase)).sum(axis=0)
        elif which == "bz":
            out = (c_z * np.cos(phase)).sum(axis=0)
        else:
            out = (c_a * np.cos(phase)).sum(axis=0)
        return out.reshape(shape) if shape else float(out[0])

    def b_r(self, r, z):
        """Radial flux density in the winding region, tesla."""
        return self._eval(r, z, "br")

    def b_z(self, r, z):
        """Axial flux density in the winding region, tesla."""
        return self._eval(r, z, "bz")

    def a_phi(self, r, z):
        """Azimuthal vector potential in the winding region, T*m."""
        return self._eval(r, z, "a")

    def divergence(self, r, z, h: float = 1e-8) -> np.ndarray:
        """Numerical (1/r) d(r B_r)/dr + dB_z/dz on the given points."""
        r = np.asarray(r, dtype=float)
        z = np.asarray(z, dtype=float)
        d_rbr = ((r + h) * self.b_r(r + h, z) - (r - h) * self.b_r(r - h, z)) / (2.0 * h)
        d_bz = (self.b_z(r, z + h) - self.b_z(r, z - h)) / (2.0 * h)
        return d_rbr / r + d_bz


def solve_field(
    geom: GeneratorGeometry,
    magnet: MagnetSpec,
    n_harmonics: int = 15,
    yoked: bool = True,
) -> FieldSolution:
    """Solve the magnet boundary-value problem up to odd order n_harmonics."""
    bad = _structural_violations(geom)
    if bad:
        raise ValidationError("; ".join(bad))
    if n_harmonics < 1:
        raise ValidationError("n_harmonics must be >= 1")
    orders = np.arange(1, n_harmonics + 1, 2)
    m = orders * math.pi / geom.tau_p

    n = orders.size
    a_h = np.zeros(n)
    b_h = np.zeros(n)
    c_h = np.zeros(n)
    d_h = np.zeros(n)
    if magnet.br > 0.0:
        mu = magnet.mu_r
        for k in range(n):
            mk = m[k]
            x0, xm, xs = mk * geom.r0, mk * geom.rm, mk * geom.rs
            s_k = -2.0 * magnet.br / (orders[k] * mk)  # particular amplitude
            d0_0, d0_m = _bessel_struve_diff(0, np.array([x0, xm]))
            d1_m = float(_bessel_struve_diff(1, np.array([xm]))[0])
            e_0m = math.exp(x0 - xm)
            i0_0 = special.ive(0, x0)
            k0_0 = special.kve(0, x0)
            i0_m, i1_m = special.ive(0, xm), special.ive(1, xm)
            k0_m, k1_m = special.kve(0, xm), special.kve(1, xm)
            if yoked:
                e_ms = math.exp(xm - xs)
                i0_s = special.ive(0, xs)
                k0_s = special.kve(0, xs)
                mat = np.array(
                    [
                        [i0_0 * e_0m, -k0_0, 0.0, 0.0],
                        [0.0, 0.0, i0_s, -k0_s * e_ms],
                        [i1_m, k1_m * e_0m, -i1_m * e_ms, -k1_m],
                        [i0_m / mu, -k0_m * e_0m / mu, -i0_m * e_ms, k0_m],
                    ]
                )
                rhs = np.array([-s_k * d0_0, 0.0, -s_k * d1_m, -s_k * d0_m / mu])
            else:
                mat = np.array(
                    [
                        [i0_0 * e_0m, -k0_0, 0.0],
                        [i1_m, k1_m * e_0m, -k1_m],
                        [i0_m / mu, -k0_m * e_0m / mu, k0_m],
                    ]
                )
                rhs = np.array([-s_k * d0_0, -s_k * d1_m, -s_k * d0_m / mu])
            if not np.isfinite(mat).all() or np.linalg.cond(mat) > 1e12:
                raise NumericError(
                    f"field harmonic n={orders[k]} is ill-conditioned for this geometry"
                )
            sol = np.linalg.solve(mat, rhs)
            a_h[k], b_h[k] = sol[0], sol[1]
            if yoked:
                c_h[k], d_h[k] = sol[2], sol[3]
            else:
                d_h[k] = sol[2]
    return FieldSolution(
        geom=geom, magnet=magnet, orders=orders, m=m, yoked=yoked,
        _a=a_h, _b=b_h, _c=c_h, _d=d_h,
    )


# winding band pattern over one pole pair: [A+, C-, B+, A-, C+, B-]
_BAND_PHASE = np.array([0, 2, 1, 0, 2, 1])
_BAND_SIGN = np.array([1.0, -1.0, 1.0, -1.0, 1.0, -1.0])


def _coupling_intervals(xi: float, geom: GeneratorGeometry, span):
    """Break [xi, xi+le] into pieces where band and taper are both smooth.

    Returns translator-frame bounds (u1, u2), the taper coefficients
    (w = p + q*u on each piece), and the band sign/phase labels.
    """
    wc = geom.coil_width
    lo, hi = (span if span is not None else (xi, xi + geom.le))
    z_lo, z_hi = max(xi, lo), min(xi + geom.le, hi)
    k0 = math.ceil(z_lo / wc - 1e-12)
    k1 = math.floor(z_hi / wc + 1e-12)
    pts = np.concatenate(
        [
            [z_lo, z_hi, xi + geom.tau_p, xi + geom.le - geom.tau_p, xi + 0.5 * geom.le],
            np.arange(k0, k1 + 1) * wc,
        ]
    )
    pts = np.unique(np.clip(pts, z_lo, z_hi))
    z1, z2 = pts[:-1], pts[1:]
    keep = z2 - z1 > 1e-15
    z1, z2 = z1[keep], z2[keep]
    mid = 0.5 * (z1 + z2)
    band = np.floor_divide(mid, wc).astype(int) % 6
    u_mid = mid - xi
    p = np.where(u_mid < geom.tau_p, 0.0, np.where(geom.le - u_mid < geom.tau_p, geom.le / geom.tau_p, 1.0))
    q = np.where(u_mid < geom.tau_p, 1.0 / geom.tau_p, np.where(geom.le - u_mid < geom.tau_p, -1.0 / geom.tau_p, 0.0))
    return z1 - xi, z2 - xi, p, q, _BAND_SIGN[band], _BAND_PHASE[band]


def _windowed_integrals(m: np.ndarray, u1, u2, p, q, trig: str):
    """Exact integral of (p + q*u) * sin(m*u) (or cos) on each piece.

    Shape (n_harmonics, n_pieces).
    """
    mu1 = m[:, None] * u1[None, :]
    mu2 = m[:, None] * u2[None, :]
    m_c = m[:, None]
    if trig == "sin":
        i0 = (np.cos(mu1) - np.cos(mu2)) / m_c
        i1 = (np.sin(mu2) - mu2 * np.cos(mu2) - np.sin(mu1) + mu1 * np.cos(mu1)) / m_c**2
    else:
        i0 = (np.sin(mu2) - np.sin(mu1)) / m_c
        i1 = (np.cos(mu2) + mu2 * np.sin(mu2) - np.cos(mu1) - mu1 * np.sin(mu1)) / m_c**2
    return p[None, :] * i0 + q[None, :] * i1


@dataclass(frozen=True)
class EmfProfile:
    """Per-phase coupling constants k_e(x) of the translator position.

    phase_constants(x) returns the three per-phase EMF constants in
    V*s/m (equal to the per-ampere force constants, N/A); e_ph =
    k_e,ph(x) * v. amplitude is the fundamental amplitude of one phase
    under full overlap.
    """

    field: FieldSolution
    geom: GeneratorGeometry
    winding: WindingSpec
    stator_span: tuple[float, float] | None
    _radial_br: np.ndarray  # per-harmonic integral of 2 pi r B_r over the coil annulus
    _radial_a: np.ndarray  # same for the vector potential

    @property
    def period(self) -> float:
        return 2.0 * self.geom.tau_p

    def _accumulate(self, x, radial: np.ndarray, trig: str) -> np.ndarray:
        xs = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.zeros((xs.size, 3))
        for i, xi in enumerate(xs):
            u1, u2, p, q, sign, phase = _coupling_intervals(xi, self.geom, self.stator_span)
            if u1.size == 0:
                continue
            piece = sign * (radial @ _windowed_integrals(self.field.m, u1, u2, p, q, trig))
            for ph in range(3):
                out[i, ph] = piece[phase == ph].sum()
        out *= self.winding.turns_per_coil / (self.geom.coil_width * self.geom.winding_t)
        return out if np.ndim(x) else out[0]

    def phase_constants(self, x) -> np.ndarray:
        """k_e per phase at displacement(s) x; shape (3,) or (len(x), 3)."""
        return self._accumulate(x, self._radial_br, "sin")

    def flux_linkage(self, x) -> np.ndarray:
        """Per-phase flux linkage at displacement(s) x, weber-turns.

        Independent of phase_constants: integrates the vector potential
        instead of the radial field (d(linkage)/dx approximates k_e up
        to the end-taper correction).
        """
        return self._accumulate(x, self._radial_a, "cos")

    @property
    def amplitude(self) -> float:
        """Fundamental amplitude of k_e over one period, V*s/m."""
        x = np.linspace(0.0, self.period, 48, endpoint=False)
        k = self.phase_constants(x)
        theta = np.pi * x / self.geom.tau_p
        proj = 2.0 * np.mean(k[:, 0] * np.exp(-1j * theta))
        return float(np.abs(proj))


def emf_profile(
    field: FieldSolution,
    geom: GeneratorGeometry,
    winding: WindingSpec,
    stator_span: tuple[float, float] | None = None,
) -> EmfProfile:
    """Build the per-phase EMF/force-constant profile for this winding.

    ``stator_span`` bounds the wound region axially; by default coils
    cover every position the translator can reach.
    """
    if winding.turns_per_coil == 0:
        raise ValidationError("winding has zero turns")
    nodes, weights = leggauss(16)
    r_q = 0.5 * (geom.rs + geom.ri) + 0.5 * (geom.rs - geom.ri) * nodes
    w_r = 2.0 * np.pi * r_q * 0.5 * (geom.rs - geom.ri) * weights
    c_a, c_r, _ = field._region2(r_q)
    return EmfProfile(
        field=field, geom=geom, winding=winding, stator_span=stator_span,
        _radial_br=(c_r * w_r[None, :]).sum(axis=1),
        _radial_a=(c_a * w_r[None, :]).sum(axis=1),
    )


def _commutation(profile: EmfProfile, n_positions: int):
    """Displacement grid, electrical angle, and aligned phase currents.

    Each phase current tracks the fundamental of its own k_e(x), which
    is what an ideal q-axis controller does.
    """
    x = np.linspace(0.0, profile.period, n_positions, endpoint=False)
    k = profile.phase_constants(x)
    theta = np.pi * x / profile.geom.tau_p
    rot = np.exp(-1j * theta)
    proj = 2.0 * (k * rot[:, None]).mean(axis=0)
    currents = np.cos(theta[:, None] + np.angle(proj)[None, :])
    return x, k, currents


def thrust(
    field: FieldSolution,
    geom: GeneratorGeometry,
    winding: WindingSpec,
    j_rms: float | None = None,
    i_peak: float | None = None,
    n_positions: int = 48,
) -> float:
    """Average axial force with ideally commutated three-phase currents, N.

    Exactly one of ``j_rms`` (winding current density, A/m^2) or
    ``i_peak`` (peak phase current, A) selects the excitation.
    """
    if (j_rms is None) == (i_peak is None):
        raise ValidationError("give exactly one of j_rms or i_peak")
    if i_peak is None:
        i_peak = math.sqrt(2.0) * j_rms * winding.wire_area
    if i_peak == 0.0:
        return 0.0
    profile = emf_profile(field, geom, winding)
    _, k, currents = _commutation(profile, n_positions)
    return float((k * i_peak * currents).sum(axis=1).mean())


def force_ripple(
    field: FieldSolution,
    geom: GeneratorGeometry,
    winding: WindingSpec,
    n_positions: int = 96,
) -> float:
    """Peak-to-peak over mean of the commutated force across one period."""
    profile = emf_profile(field, geom, winding)
    _, k, currents = _commutation(profile, n_positions)
    f = (k * currents).sum(axis=1)
    mean = f.mean()
    if abs(mean) < 1e-12 or abs(mean) < 1e-3 * np.abs(f).max():
        raise NumericError("force ripple undefined: mean force is ~0")
    return float((f.max() - f.min()) / mean)


def yoke_sensitivity(
    geom: GeneratorGeometry, magnet: MagnetSpec, n_harmonics: int = 15
) -> float:
    """Thrust ratio with the stator yoke removed (decay outer boundary)."""
    probe = WindingSpec(turns_per_coil=1, wire_area=1e-6, fill=1.0)
    with_yoke = thrust(
        solve_field(geom, magnet, n_harmonics, yoked=True), geom, probe, i_peak=1.0
    )
    without = thrust(
        solve_field(geom, magnet, n_harmonics, yoked=False), geom, probe, i_peak=1.0
    )
    return without / with_yoke


def table_geometry() -> GeneratorGeometry:
    """Full-scale design point: 8 poles, 300 mm translator, N50 magnets."""
    return GeneratorGeometry.from_thicknesses(
        shaft_r=0.050, backiron_t=0.025, magnet_t=0.004, airgap=0.001,
        winding_t=0.005, yoke_t=0.005, poles=8, tau_p=0.0375,
    )


def prototype_winding_t() -> float:
    """Wound depth back-solved from 70 turns of 20 AWG at 0.75 fill (~7.6 mm)."""
    return 70 * awg_area(20) / (0.75 * 0.01905 / 3.0)


def prototype_geometry() -> GeneratorGeometry:
    """Bench prototype: 12 poles of N42, 3 mm gap, no stator yoke.

    The coil annulus depth comes from prototype_winding_t (the outer
    winding radius is not part of the published build sheet).
    """
    return GeneratorGeometry.from_thicknesses(
        shaft_r=0.0085, backiron_t=0.02325, magnet_t=0.00635, airgap=0.003,
        winding_t=prototype_winding_t(), yoke_t=0.0, poles=12, tau_p=0.01905,
    )
