"""Synthetic periodic sequences with ground-truth deformation maps.

A disk shrinks and expands periodically.  Frame ``k`` is produced from the
reference (smallest) disk by a smooth radial map that is the identity
outside an annulus, pushes the reference circle of radius ``r_min`` onto
radius ``r(k)``, and whose outer support radius grows with ``r(k)``.  The
last property keeps the Beltrami columns of distinct radii numerically
independent, so the descriptor rank equals the number of distinct
non-identity frames in a cycle.

Perturbed cycles either compose each affected frame's map with a
localized radial push living in an annular sector around the deformed
circle (``perturbation="push"``), or add a localized radial-stretch bump to
its Beltrami field over the same sector and re-solve the map
(``perturbation="beltrami"``).  Either way the Beltrami field changes only
on faces of that sector.
"""

from dataclasses import dataclass, field, replace

import numpy as np

from .beltrami import compute_beltrami
from .errors import AmplitudeTooLargeError, DimensionError
from .imaging import warp_image
from .lbs import solve_lbs
from .mesh import build_domain, check_orientation


def smootherstep(t):
    t = np.clip(t, 0.0, 1.0)
    return t * t * t * (t * (6.0 * t - 15.0) + 10.0)


def _bump(t):
    """C2 bump on [-1, 1], equal to 1 at 0."""
    return 1.0 - smootherstep(np.abs(t))


@dataclass(frozen=True)
class Bump:
    """Radial push ``a * B(radius) * B(angle)`` around a circle of radius ``radius``."""

    center: tuple
    radius: float
    halfwidth: float
    center_angle: float
    angular_width: float
    amplitude: float

    def displacement(self, w):
        """Radial displacement magnitude at complex points ``w``."""
        z = w - complex(*self.center)
        rho = np.abs(z)
        theta = np.angle(z)
        dtheta = np.angle(np.exp(1j * (theta - self.center_angle)))
        return (
            self.amplitude
            * _bump((rho - self.radius) / self.halfwidth)
            * _bump(dtheta / (0.5 * self.angular_width))
        )

    def apply(self, w):
        z = w - complex(*self.center)
        rho = np.abs(z)
        direction = np.where(rho > 0, z / np.where(rho > 0, rho, 1.0), 0.0)
        return w + self.displacement(w) * direction

    def support(self, w):
        z = w - complex(*self.center)
        rho = np.abs(z)
        dtheta = np.angle(np.exp(1j * (np.angle(z) - self.center_angle)))
        return (np.abs(rho - self.radius) < self.halfwidth) & (
            np.abs(dtheta) < 0.5 * self.angular_width
        )


@dataclass(frozen=True)
class SequenceSpec:
    """Parameters of a synthetic shrink/expand sequence.

    Radii follow ``r(k) = r_min + amplitude * (1 - cos(2 pi k / c)) / 2``
    within each cycle.  ``bump_frames`` is a half-open ``(start, stop)``
    range of in-cycle positions hit on every perturbed cycle.
    """

    m: int = 64
    n: int = 64
    cycle_length: int = 16
    cycles: int = 6
    base_radius: float = 8.0
    amplitude: float = 8.0
    inner_margin: float = 5.0
    outer_margin: float = 4.0
    perturbed_cycles: tuple = (1, 4)
    bump_angle: float = 0.0
    bump_width: float = np.pi / 2
    bump_amplitude: float = 1.5
    bump_halfwidth: float = 4.0
    bump_frames: tuple = (3, 7)
    perturbation: str = "push"
    bump_mu: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if self.cycle_length < 2:
            raise DimensionError("cycle length must be >= 2")
        if self.cycles < 1:
            raise DimensionError("need at least one cycle")
        if any(not 0 <= p < self.cycles for p in self.perturbed_cycles):
            raise DimensionError(f"perturbed cycles {self.perturbed_cycles} outside [0, {self.cycles})")
        lo, hi = self.bump_frames
        if not 0 <= lo <= hi <= self.cycle_length:
            raise DimensionError(f"bump frame range {self.bump_frames} outside the cycle")
        if self.perturbation not in ("push", "beltrami"):
            raise ValueError(f"unknown perturbation mode {self.perturbation!r}")
        if self.base_radius - self.inner_margin <= 0:
            raise DimensionError("inner margin swallows the centre")
        reach = max(self.outer_radius(self.base_radius + self.amplitude),
                    self.base_radius + self.amplitude + self.bump_halfwidth + self.bump_amplitude)
        room = 0.5 * (min(self.m, self.n) - 1)
        if reach >= room:
            raise DimensionError(
                f"deformation support reaches radius {reach:.2f}; the grid only allows < {room:.2f}"
            )

    @property
    def n_frames(self):
        return self.cycle_length * self.cycles

    @property
    def center(self):
        return (0.5 * (self.m - 1), 0.5 * (self.n - 1))

    def radius(self, k):
        phase = 2.0 * np.pi * (k % self.cycle_length) / self.cycle_length
        return self.base_radius + self.amplitude * 0.5 * (1.0 - np.cos(phase))

    def outer_radius(self, r):
        return r + (r - self.base_radius) + self.outer_margin

    @property
    def distinct_frames(self):
        """Number of distinct non-identity maps per cycle."""
        return self.cycle_length // 2


DESK = SequenceSpec()
LARGE = SequenceSpec(
    m=100, n=100, cycle_length=48, cycles=9, base_radius=12.0, amplitude=14.0,
    inner_margin=7.0, outer_margin=5.0, perturbed_cycles=(2, 5, 7),
    bump_amplitude=2.0, bump_halfwidth=5.0, bump_frames=(8, 20),
)
PRESETS = {"desk": DESK, "large": LARGE}


@dataclass(eq=False)
class SequenceDataset:
    """Frames, ground-truth maps and labels of a synthetic sequence."""

    spec: SequenceSpec
    domain: object
    frames: list
    maps: list
    clean_maps: list
    perturbed: np.ndarray
    reference_index: int = 0
    bumps: dict = field(default_factory=dict)

    @property
    def reference_image(self):
        return self.frames[self.reference_index]

    @property
    def perturbed_frames(self):
        return np.flatnonzero(self.perturbed)


def radial_map(domain, spec, r):
    """Boundary-fixing radial map sending the circle of radius ``base_radius`` to ``r``."""
    z = domain.positions - complex(*spec.center)
    rho = np.abs(z)
    r0 = spec.base_radius
    delta = r - r0
    if delta == 0:
        return domain.identity_map()
    rho_in = r0 - spec.inner_margin
    rho_out = spec.outer_radius(r)
    rise = smootherstep((rho - rho_in) / (r0 - rho_in))
    fall = 1.0 - smootherstep((rho - r0) / (rho_out - r0))
    profile = np.where(rho <= r0, rise, fall)
    scale = np.where(rho > 0, (rho + delta * profile) / np.where(rho > 0, rho, 1.0), 1.0)
    out = complex(*spec.center) + z * scale
    out[domain.boundary] = domain.positions[domain.boundary]
    return out


def _ensure_admissible(fmap, domain, frame):
    mu = compute_beltrami(fmap, domain)
    mag = np.abs(mu)
    if mag.max() >= 1.0 or not check_orientation(fmap, domain)[1]:
        face = int(np.argmax(mag))
        raise AmplitudeTooLargeError(
            f"frame {frame}: |mu| = {mag[face]:.4f} on face {face}; deformation too large",
            face=face, frame=frame,
        )


def inject_perturbation(maps, domain, frames, bump):
    """Compose the listed frames' maps with localized bump(s).

    ``bump`` is a single :class:`Bump` or a sequence aligned with ``frames``.
    Untouched frames are returned as the very same arrays.
    """
    frames = list(frames)
    bumps = [bump] * len(frames) if isinstance(bump, Bump) else list(bump)
    if len(bumps) != len(frames):
        raise DimensionError("need one bump per perturbed frame")
    out = list(maps)
    for k, b in zip(frames, bumps):
        fmap = b.apply(maps[k])
        fmap[domain.boundary] = maps[k][domain.boundary]
        _ensure_admissible(fmap, domain, k)
        out[k] = fmap
    return out


def inject_beltrami_perturbation(maps, domain, frames, bump):
    """Add ``amplitude * B(radius) * B(angle) * exp(2i theta)`` to the listed
    frames' Beltrami fields (evaluated at face centroids) and re-solve them.

    The added term stretches radially inside the sector; the field changes
    nowhere else.
    """
    frames = list(frames)
    bumps = [bump] * len(frames) if isinstance(bump, Bump) else list(bump)
    if len(bumps) != len(frames):
        raise DimensionError("need one bump per perturbed frame")
    cent = domain.face_centroids()
    w = cent[:, 0] + 1j * cent[:, 1]
    out = list(maps)
    for k, b in zip(frames, bumps):
        theta = np.angle(w - complex(*b.center))
        mu = compute_beltrami(maps[k], domain) + b.displacement(w) * np.exp(2j * theta)
        mag = np.abs(mu)
        if mag.max() >= 1.0:
            face = int(np.argmax(mag))
            raise AmplitudeTooLargeError(
                f"frame {k}: |mu| = {mag[face]:.4f} on face {face}; bump too large", face=face, frame=k
            )
        fmap = solve_lbs(domain, mu, boundary=maps[k])
        _ensure_admissible(fmap, domain, k)
        out[k] = fmap
    return out


def render_frame(spec, r, bump=None):
    """Binary 0/255 image of the (optionally bumped) disk of radius ``r``."""
    jj, ii = np.mgrid[0:spec.n, 0:spec.m]
    w = ii + 1j * jj
    z = w - complex(*spec.center)
    rho = np.abs(z)
    edge = np.full(rho.shape, float(r))
    if bump is not None:
        on_circle = complex(*spec.center) + r * np.exp(1j * np.angle(z))
        edge = edge + bump.displacement(on_circle)
    return np.where(rho <= edge, 255, 0).astype(np.uint8)


def generate_sequence(spec=DESK, domain=None):
    """Build frames, ground-truth maps and perturbation labels for ``spec``."""
    if domain is None:
        domain = build_domain(spec.m, spec.n)
    rng = np.random.default_rng(spec.seed)
    c = spec.cycle_length

    cycle_maps = []
    for k in range(c):
        fmap = radial_map(domain, spec, spec.radius(k))
        _ensure_admissible(fmap, domain, k)
        fmap.flags.writeable = False
        cycle_maps.append(fmap)
    clean = [cycle_maps[k % c] for k in range(spec.n_frames)]

    lo, hi = spec.bump_frames
    hit, bumps = [], []
    for cyc in sorted(spec.perturbed_cycles):
        jitter = rng.uniform(-0.25, 0.25) * spec.bump_width
        span = max(hi - lo, 1)
        for pos in range(lo, hi):
            # amplitude ramps up and down across the affected frames
            ramp = np.sin(np.pi * (pos - lo + 0.5) / span)
            bumps.append(Bump(
                center=spec.center, radius=spec.radius(pos), halfwidth=spec.bump_halfwidth,
                center_angle=spec.bump_angle + jitter, angular_width=spec.bump_width,
                amplitude=spec.bump_amplitude * ramp,
            ))
            hit.append(cyc * c + pos)
    labels = np.zeros(spec.n_frames, dtype=bool)
    labels[hit] = True
    bump_of = dict(zip(hit, bumps))
    if spec.perturbation == "push":
        maps = inject_perturbation(clean, domain, hit, bumps)
        frames = [render_frame(spec, spec.radius(k), bump_of.get(k)) for k in range(spec.n_frames)]
    else:
        # same sector, pulled back to the reference circle; amplitude in units of |mu|
        mu_bumps = [replace(b, radius=spec.base_radius, amplitude=spec.bump_mu * b.amplitude / spec.bump_amplitude)
                    for b in bumps]
        maps = inject_beltrami_perturbation(clean, domain, hit, mu_bumps)
        reference = render_frame(spec, spec.radius(0))
        frames = [
            render_frame(spec, spec.radius(k)) if k not in bump_of
            else np.where(warp_image(reference, maps[k], domain) >= 128, 255, 0).astype(np.uint8)
            for k in range(spec.n_frames)
        ]
    return SequenceDataset(spec, domain, frames, maps, clean, labels, 0, bump_of)


def random_smooth_map(domain, rng, max_mu=0.5, modes=4, max_freq=3):
    """Random smooth boundary-fixing map with ``max |mu|`` about ``max_mu``.

    The displacement is a sine-windowed sum of low-frequency modes; its
    amplitude is bisected so the Beltrami sup-norm hits ``max_mu``.
    """
    x = domain.vertices[:, 0] / (domain.m - 1)
    y = domain.vertices[:, 1] / (domain.n - 1)
    window = np.sin(np.pi * x) * np.sin(np.pi * y)
    disp = np.zeros(domain.n_vertices, dtype=complex)
    for _ in range(modes):
        fx, fy = rng.integers(1, max_freq + 1, size=2)
        px, py = rng.uniform(0, 2 * np.pi, size=2)
        coef = rng.normal() + 1j * rng.normal()
        disp += coef * np.sin(np.pi * fx * x + px) * np.sin(np.pi * fy * y + py)
    disp *= window
    disp[domain.boundary] = 0.0

    def peak(s):
        return np.abs(compute_beltrami(domain.positions + s * disp, domain)).max()

    lo, hi = 0.0, 1.0
    while peak(hi) < max_mu:
        hi *= 2.0
    for _ in range(40):
        mid = 0.5 * (lo + hi)
        if peak(mid) < max_mu:
            lo = mid
        else:
            hi = mid
    out = domain.positions + lo * disp
    out[domain.boundary] = domain.positions[domain.boundary]
    return out


def random_beltrami_field(domain, rng, max_modulus=0.9, modes=8, max_freq=4):
    """Band-limited random Beltrami field scaled to ``max |mu| = max_modulus``.

    Each mode is a product of cosines with at most ``max_freq`` half-waves
    across the grid in either direction.
    """
    c = domain.face_centroids()
    x = c[:, 0] / (domain.m - 1)
    y = c[:, 1] / (domain.n - 1)
    mu = np.zeros(domain.n_faces, dtype=complex)
    for _ in range(modes):
        kx, ky = rng.integers(0, max_freq + 1, size=2)
        px, py = rng.uniform(0, 2 * np.pi, size=2)
        mu += (rng.normal() + 1j * rng.normal()) * np.cos(np.pi * kx * x + px) * np.cos(np.pi * ky * y + py)
    peak = np.abs(mu).max()
    if peak == 0:
        return mu
    return max_modulus * mu / peak


def with_overrides(spec, **kw):
    return replace(spec, **kw)
