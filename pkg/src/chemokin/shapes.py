"""Domain geometry as level sets.

A ``Shape`` is a continuous evaluator ``phi(x, y)`` that is negative strictly
inside the domain, positive outside, and zero on the wall.  Normals returned
by ``Shape.normal`` are unit length and point INWARD (into the domain).
Analytic shapes override projection/normal with closed forms; composites fall
back to a central-difference gradient of phi and a damped Newton projection.
"""

from __future__ import annotations

import numpy as np

_GRAD_STEP_FACTOR = 1e-6  # normal finite-difference step, times max(dx, dy)
_PROJECT_MAX_ITER = 50


class ProjectionError(RuntimeError):
    """Raised when a boundary projection fails to converge."""


class Shape:
    """Base level-set shape.  Subclasses implement ``phi``."""

    def phi(self, x, y):
        raise NotImplementedError

    def gradient(self, x, y, step: float):
        """Central-difference gradient of phi with the given step."""
        gx = (self.phi(x + step, y) - self.phi(x - step, y)) / (2.0 * step)
        gy = (self.phi(x, y + step) - self.phi(x, y - step)) / (2.0 * step)
        return gx, gy

    def normal(self, x, y, step: float = 1e-8):
        """Unit inward normal at (x, y); generic shapes use grad(phi)."""
        gx, gy = self.gradient(x, y, step)
        norm = np.hypot(gx, gy)
        if np.any(norm == 0.0):
            raise ProjectionError(f"vanishing level-set gradient at ({x}, {y})")
        # phi increases outward, so the inward normal is -grad(phi).
        return -gx / norm, -gy / norm

    def project(self, x, y, tol: float, step: float):
        """Project (x, y) onto the zero level set.

        Damped Newton along grad(phi): x <- x - phi * grad/|grad|^2, halving
        the step while |phi| does not decrease.  Returns (x_p, y_p).
        """
        px, py = float(x), float(y)
        val = float(self.phi(px, py))
        for _ in range(_PROJECT_MAX_ITER):
            if abs(val) <= tol:
                return px, py
            gx, gy = self.gradient(px, py, step)
            g2 = gx * gx + gy * gy
            if g2 == 0.0:
                raise ProjectionError(
                    f"projection stalled at ({px}, {py}): zero gradient"
                )
            damp = 1.0
            for _ in range(20):
                qx = px - damp * val * gx / g2
                qy = py - damp * val * gy / g2
                new = float(self.phi(qx, qy))
                if abs(new) < abs(val):
                    px, py, val = qx, qy, new
                    break
                damp *= 0.5
            else:
                raise ProjectionError(
                    f"projection of ({x}, {y}) stopped making progress at "
                    f"({px}, {py}), |phi|={abs(val):.3e}"
                )
        raise ProjectionError(
            f"projection of ({x}, {y}) did not converge in "
            f"{_PROJECT_MAX_ITER} iterations (|phi|={abs(val):.3e})"
        )

    # set operations -------------------------------------------------

    def union(self, other: "Shape") -> "Shape":
        return Union(self, other)

    def intersection(self, other: "Shape") -> "Shape":
        return Intersection(self, other)

    def complement(self) -> "Shape":
        return Complement(self)


class Rectangle(Shape):
    """Axis-aligned box; Chebyshev-style level set with exact axis normals."""

    def __init__(self, x_min, x_max, y_min, y_max):
        if x_max <= x_min or y_max <= y_min:
            raise ValueError("empty rectangle")
        self.x_min, self.x_max = float(x_min), float(x_max)
        self.y_min, self.y_max = float(y_min), float(y_max)

    def phi(self, x, y):
        cx = 0.5 * (self.x_min + self.x_max)
        cy = 0.5 * (self.y_min + self.y_max)
        ax = 0.5 * (self.x_max - self.x_min)
        ay = 0.5 * (self.y_max - self.y_min)
        return np.maximum(np.abs(np.asarray(x) - cx) - ax,
                          np.abs(np.asarray(y) - cy) - ay)

    def _active_axis(self, x, y):
        cx = 0.5 * (self.x_min + self.x_max)
        cy = 0.5 * (self.y_min + self.y_max)
        tx = abs(x - cx) - 0.5 * (self.x_max - self.x_min)
        ty = abs(y - cy) - 0.5 * (self.y_max - self.y_min)
        # Ties break toward the y wall, matching the stencil tie rule.
        return ("x", cx) if tx > ty else ("y", cy)

    def normal(self, x, y, step: float = 0.0):
        axis, centre = self._active_axis(float(x), float(y))
        if axis == "x":
            return (-1.0, 0.0) if x > centre else (1.0, 0.0)
        return (0.0, -1.0) if y > centre else (0.0, 1.0)

    def project(self, x, y, tol: float, step: float):
        axis, centre = self._active_axis(float(x), float(y))
        if axis == "x":
            wall = self.x_max if x > centre else self.x_min
            return wall, min(max(float(y), self.y_min), self.y_max)
        wall = self.y_max if y > centre else self.y_min
        return min(max(float(x), self.x_min), self.x_max), wall


class Disc(Shape):
    """Disc of given centre and radius; exact radial normals."""

    def __init__(self, center, radius):
        if radius <= 0:
            raise ValueError("disc radius must be positive")
        self.cx, self.cy = float(center[0]), float(center[1])
        self.radius = float(radius)

    def phi(self, x, y):
        return np.hypot(np.asarray(x) - self.cx, np.asarray(y) - self.cy) - self.radius

    def normal(self, x, y, step: float = 0.0):
        rx, ry = float(x) - self.cx, float(y) - self.cy
        r = np.hypot(rx, ry)
        if r == 0.0:
            return (1.0, 0.0)  # arbitrary at the centre; never a wall point
        return -rx / r, -ry / r

    def project(self, x, y, tol: float, step: float):
        rx, ry = float(x) - self.cx, float(y) - self.cy
        r = np.hypot(rx, ry)
        if r == 0.0:
            return self.cx + self.radius, self.cy
        return self.cx + self.radius * rx / r, self.cy + self.radius * ry / r


class HalfPlane(Shape):
    """Half plane ``n . x >= d`` is outside; inward normal is -n."""

    def __init__(self, normal, offset):
        nx, ny = float(normal[0]), float(normal[1])
        norm = np.hypot(nx, ny)
        if norm == 0.0:
            raise ValueError("half-plane normal must be nonzero")
        self.nx, self.ny = nx / norm, ny / norm
        self.offset = float(offset) / norm

    def phi(self, x, y):
        return self.nx * np.asarray(x) + self.ny * np.asarray(y) - self.offset

    def normal(self, x, y, step: float = 0.0):
        return -self.nx, -self.ny

    def project(self, x, y, tol: float, step: float):
        d = self.nx * float(x) + self.ny * float(y) - self.offset
        return float(x) - d * self.nx, float(y) - d * self.ny


class Union(Shape):
    def __init__(self, a: Shape, b: Shape):
        self.a, self.b = a, b

    def phi(self, x, y):
        return np.minimum(self.a.phi(x, y), self.b.phi(x, y))


class Intersection(Shape):
    def __init__(self, a: Shape, b: Shape):
        self.a, self.b = a, b

    def phi(self, x, y):
        return np.maximum(self.a.phi(x, y), self.b.phi(x, y))


class Complement(Shape):
    def __init__(self, a: Shape):
        self.a = a

    def phi(self, x, y):
        return -self.a.phi(x, y)


class Annulus(Shape):
    """Ring r_inner <= r <= r_outer around a centre."""

    def __init__(self, center, r_inner, r_outer):
        if not 0.0 <= r_inner < r_outer:
            raise ValueError("need 0 <= r_inner < r_outer")
        self.cx, self.cy = float(center[0]), float(center[1])
        self.r_inner, self.r_outer = float(r_inner), float(r_outer)

    def phi(self, x, y):
        r = np.hypot(np.asarray(x) - self.cx, np.asarray(y) - self.cy)
        return np.maximum(r - self.r_outer, self.r_inner - r)


_U_OPENINGS = {"down", "up", "left", "right"}


class UChannel(Shape):
    """U-shaped channel: half-annulus bend plus two straight legs.

    ``center`` is the bend centre, the channel width is r_outer - r_inner,
    the legs extend ``leg_length`` from the bend on the opening side.
    ``opening`` names the direction the U opens toward.  Projection and
    normals are piecewise exact (arcs, wall segments, leg end caps), which
    keeps ghost construction robust at the leg/bend seams where a Newton
    iteration on the composite level set would cycle.
    """

    def __init__(self, center, r_inner, r_outer, leg_length, opening="down"):
        if opening not in _U_OPENINGS:
            raise ValueError(f"opening must be one of {sorted(_U_OPENINGS)}")
        if not 0.0 <= r_inner < r_outer:
            raise ValueError("need 0 <= r_inner < r_outer")
        if leg_length < 0:
            raise ValueError("leg_length must be nonnegative")
        self.cx, self.cy = float(center[0]), float(center[1])
        self.r_inner, self.r_outer = float(r_inner), float(r_outer)
        self.leg_length = float(leg_length)
        self.opening = opening

    # canonical frame: bend occupies v >= 0, legs at v in [-L, 0]

    def _to_local(self, x, y):
        dx, dy = np.asarray(x) - self.cx, np.asarray(y) - self.cy
        if self.opening == "down":
            return dx, dy
        if self.opening == "up":
            return dx, -dy
        if self.opening == "left":
            return dy, dx
        return dy, -dx  # right

    def _vec_from_local(self, nu, nv):
        if self.opening == "down":
            return nu, nv
        if self.opening == "up":
            return nu, -nv
        if self.opening == "left":
            return nv, nu
        return -nv, nu  # right

    def _boundary_candidates(self, u, v):
        """(point_u, point_v, normal_u, normal_v) per boundary piece.

        Works elementwise on arrays; normals point into the channel.
        """
        ri, ro, L = self.r_inner, self.r_outer, self.leg_length
        u = np.asarray(u, dtype=float)
        v = np.asarray(v, dtype=float)
        out = []
        theta = np.arctan2(v, u)
        theta = np.where(theta < 0.0,
                         np.where(theta >= -np.pi / 2, 0.0, np.pi), theta)
        cu, cv = np.cos(theta), np.sin(theta)
        out.append((ro * cu, ro * cv, -cu, -cv))           # outer arc
        if ri > 0.0:
            out.append((ri * cu, ri * cv, cu, cv))         # inner arc
        vc = np.clip(v, -L, 0.0)
        ones = np.ones_like(u)
        for side in (-1.0, 1.0):
            out.append((side * ro * ones, vc, -side * ones, 0.0 * ones))
            if ri > 0.0:
                out.append((side * ri * ones, vc, side * ones, 0.0 * ones))
            uc = side * np.clip(side * u, ri, ro)
            out.append((uc, -L * ones, 0.0 * ones, ones))  # leg end cap
        return out

    def _inside(self, u, v):
        ri, ro, L = self.r_inner, self.r_outer, self.leg_length
        r = np.hypot(u, v)
        bend = (v >= 0.0) & (r >= ri) & (r <= ro)
        au = np.abs(u)
        legs = (v <= 0.0) & (v >= -L) & (au >= ri) & (au <= ro)
        return bend | legs

    def phi(self, x, y):
        """Exact signed distance to the channel boundary.

        Built from the boundary pieces directly; a composite min/max of the
        constituent level sets would read zero on the internal seam where
        the legs meet the bend and misclassify points there.
        """
        u, v = self._to_local(x, y)
        u = np.asarray(u, dtype=float)
        v = np.asarray(v, dtype=float)
        d2 = None
        for pu, pv, _, _ in self._boundary_candidates(u, v):
            cand = (u - pu) ** 2 + (v - pv) ** 2
            d2 = cand if d2 is None else np.minimum(d2, cand)
        dist = np.sqrt(d2)
        phi = np.where(self._inside(u, v), -dist, dist)
        return phi if phi.shape else float(phi)

    def project(self, x, y, tol: float, step: float):
        u, v = self._to_local(float(x), float(y))
        best = None
        for pu, pv, _, _ in self._boundary_candidates(u, v):
            d2 = float((u - pu) ** 2 + (v - pv) ** 2)
            if best is None or d2 < best[0] - 1e-30:
                best = (d2, float(pu), float(pv))
        ox, oy = self._vec_from_local(best[1], best[2])
        return self.cx + ox, self.cy + oy

    def normal(self, x, y, step: float = 0.0):
        u, v = self._to_local(float(x), float(y))
        best = None
        for pu, pv, nu, nv in self._boundary_candidates(u, v):
            d2 = float((u - pu) ** 2 + (v - pv) ** 2)
            if best is None or d2 < best[0] - 1e-30:
                best = (d2, float(nu), float(nv))
        return self._vec_from_local(best[1], best[2])


def u_channel(center, r_inner, r_outer, leg_length, opening="down") -> Shape:
    """Named constructor for :class:`UChannel`."""
    return UChannel(center, r_inner, r_outer, leg_length, opening)


def rectangle(x_min, x_max, y_min, y_max) -> Shape:
    return Rectangle(x_min, x_max, y_min, y_max)


def disc(center, radius) -> Shape:
    return Disc(center, radius)


def half_plane(normal, offset) -> Shape:
    return HalfPlane(normal, offset)
