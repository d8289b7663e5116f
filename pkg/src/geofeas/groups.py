"""Matrix Lie group kernel for SO(3), SE(2), SE(3) and finite products.

Group elements are stored as homogeneous matrices (3x3 for SO(3) and
SE(2), 4x4 for SE(3)). Algebra and coalgebra elements are stored as
coordinate vectors against a fixed basis:

    SO(3): (w1, w2, w3), the usual skew generators,
    SE(2): (v1, v2, w), translations first, rotation last,
    SE(3): (nu1, nu2, nu3, W1, W2, W3), translational before angular.

The canonical pairing between coalgebra and algebra elements is the dot
product of coordinates. The trace pairing tr(alpha * xi) is available as
a view through ``dual_basis`` and ``pairing_trace``; both agree because
the dual basis matrices are constructed to be dual to the algebra basis
under the trace.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

SO3 = "SO3"
SE2 = "SE2"
SE3 = "SE3"

_GROUP_TAGS = (SO3, SE2, SE3)

# algebra dimension and matrix size per group
_ALG_DIM = {SO3: 3, SE2: 3, SE3: 6}
_MAT_DIM = {SO3: 3, SE2: 3, SE3: 4}

_ORTHO_KEEP_TOL = 1e-10    # accept rotation block as-is below this
_ORTHO_REPAIR_TOL = 1e-6   # re-project up to this, reject beyond


def algebra_dim(group_tag):
    _check_tag(group_tag)
    return _ALG_DIM[group_tag]


def matrix_dim(group_tag):
    _check_tag(group_tag)
    return _MAT_DIM[group_tag]


def _check_tag(group_tag):
    if group_tag not in _GROUP_TAGS:
        raise ValueError(f"unknown group tag {group_tag!r}, expected one of {_GROUP_TAGS}")


def _skew3(w):
    return np.array([
        [0.0, -w[2], w[1]],
        [w[2], 0.0, -w[0]],
        [-w[1], w[0], 0.0],
    ])


def _unskew3(A):
    return np.array([A[2, 1], A[0, 2], A[1, 0]])


def hat_matrix(v, group_tag):
    """Matrix form of the algebra element with coordinates ``v``."""
    _check_tag(group_tag)
    v = np.asarray(v, dtype=float)
    n = _ALG_DIM[group_tag]
    if v.shape != (n,):
        raise ValueError(f"{group_tag} algebra coordinates must have shape ({n},), got {v.shape}")
    if group_tag == SO3:
        return _skew3(v)
    if group_tag == SE2:
        A = np.zeros((3, 3))
        A[0, 1] = -v[2]
        A[1, 0] = v[2]
        A[0, 2] = v[0]
        A[1, 2] = v[1]
        return A
    A = np.zeros((4, 4))
    A[:3, :3] = _skew3(v[3:])
    A[:3, 3] = v[:3]
    return A


def vee_matrix(A, group_tag):
    """Coordinates of an algebra matrix, inverse of ``hat_matrix``."""
    _check_tag(group_tag)
    A = np.asarray(A, dtype=float)
    d = _MAT_DIM[group_tag]
    if A.shape != (d, d):
        raise ValueError(f"{group_tag} algebra matrix must have shape ({d},{d}), got {A.shape}")
    if group_tag == SO3:
        return _unskew3(A)
    if group_tag == SE2:
        return np.array([A[0, 2], A[1, 2], A[1, 0]])
    return np.concatenate([A[:3, 3], _unskew3(A[:3, :3])])


def basis_matrices(group_tag):
    """The fixed algebra basis as an (n, d, d) array."""
    n = algebra_dim(group_tag)
    out = np.zeros((n, _MAT_DIM[group_tag], _MAT_DIM[group_tag]))
    for k in range(n):
        coords = np.zeros(n)
        coords[k] = 1.0
        out[k] = hat_matrix(coords, group_tag)
    return out


def dual_basis_matrices(group_tag):
    """Dual basis matrices e^k with tr(e^k e_s) = delta_ks.

    For SE(2) these are the elementary matrices E31, E32 and the
    half-spin matrix [[0, 1/2, 0], [-1/2, 0, 0], [0, 0, 0]].
    """
    _check_tag(group_tag)
    if group_tag == SO3:
        return np.stack([-0.5 * _skew3(e) for e in np.eye(3)])
    if group_tag == SE2:
        e1 = np.zeros((3, 3))
        e1[2, 0] = 1.0
        e2 = np.zeros((3, 3))
        e2[2, 1] = 1.0
        e3 = np.zeros((3, 3))
        e3[0, 1] = 0.5
        e3[1, 0] = -0.5
        return np.stack([e1, e2, e3])
    out = np.zeros((6, 4, 4))
    for k in range(3):
        out[k][3, k] = 1.0
    for k in range(3):
        e = np.zeros(3)
        e[k] = 1.0
        out[3 + k][:3, :3] = -0.5 * _skew3(e)
    return out


def _project_rotation(R):
    # nearest rotation in Frobenius norm (polar factor with det fixed to +1)
    U, _, Vt = np.linalg.svd(R)
    D = np.eye(R.shape[0])
    D[-1, -1] = np.sign(np.linalg.det(U @ Vt))
    return U @ D @ Vt


def _validated_group_matrix(group_tag, matrix):
    d = _MAT_DIM[group_tag]
    M = np.array(matrix, dtype=float)
    if M.shape != (d, d):
        raise ValueError(f"{group_tag} element must be a ({d},{d}) matrix, got {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ValueError("group element matrix has non-finite entries")

    rdim = 3 if group_tag in (SO3, SE3) else 2
    R = M[:rdim, :rdim]
    if np.linalg.det(R) <= 0.0:
        raise ValueError("rotation block has non-positive determinant")
    ortho_err = np.linalg.norm(R.T @ R - np.eye(rdim))
    if ortho_err > _ORTHO_REPAIR_TOL:
        raise ValueError(
            f"rotation block is not orthogonal (error {ortho_err:.3e} exceeds {_ORTHO_REPAIR_TOL:.0e})"
        )
    if ortho_err > _ORTHO_KEEP_TOL:
        R = _project_rotation(R)

    out = np.zeros((d, d))
    out[:rdim, :rdim] = R
    if group_tag != SO3:
        bottom = M[rdim:, :]
        expected = np.zeros((d - rdim, d))
        expected[-1, -1] = 1.0
        if np.linalg.norm(bottom - expected) > _ORTHO_REPAIR_TOL:
            raise ValueError("homogeneous bottom row must be (0, ..., 0, 1)")
        out[:rdim, rdim:] = M[:rdim, rdim:]
        out[rdim:, :] = expected
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class GroupElement:
    """An element of SO(3), SE(2) or SE(3) in homogeneous matrix form.

    The constructor validates the rotation block: orthogonality error up
    to 1e-10 is accepted as-is, up to 1e-6 is repaired by projection to
    the nearest rotation, anything worse is rejected.
    """

    group_tag: str
    matrix: np.ndarray

    def __post_init__(self):
        _check_tag(self.group_tag)
        object.__setattr__(self, "matrix", _validated_group_matrix(self.group_tag, self.matrix))

    @classmethod
    def from_parts(cls, group_tag, rotation, translation=None):
        _check_tag(group_tag)
        d = _MAT_DIM[group_tag]
        M = np.eye(d)
        rdim = 3 if group_tag in (SO3, SE3) else 2
        M[:rdim, :rdim] = np.asarray(rotation, dtype=float)
        if group_tag == SO3:
            if translation is not None:
                raise ValueError("SO(3) elements carry no translation")
        else:
            M[:rdim, rdim] = np.asarray(translation, dtype=float)
        return cls(group_tag, M)

    @property
    def rotation(self):
        rdim = 3 if self.group_tag in (SO3, SE3) else 2
        return self.matrix[:rdim, :rdim]

    @property
    def translation(self):
        if self.group_tag == SO3:
            raise ValueError("SO(3) elements carry no translation")
        rdim = 2 if self.group_tag == SE2 else 3
        return self.matrix[:rdim, rdim]


def se2_from_pose(x, y, theta):
    """SE(2) element with position (x, y) and heading theta."""
    c, s = np.cos(theta), np.sin(theta)
    return GroupElement.from_parts(SE2, np.array([[c, -s], [s, c]]), np.array([x, y]))


@dataclass(frozen=True, eq=False)
class AlgebraElement:
    """Algebra element with coordinate vector ``coords`` in the fixed basis."""

    group_tag: str
    coords: np.ndarray

    def __post_init__(self):
        _check_tag(self.group_tag)
        c = np.array(self.coords, dtype=float)
        n = _ALG_DIM[self.group_tag]
        if c.shape != (n,):
            raise ValueError(f"{self.group_tag} algebra coordinates must have shape ({n},)")
        if not np.all(np.isfinite(c)):
            raise ValueError("algebra coordinates must be finite")
        c.setflags(write=False)
        object.__setattr__(self, "coords", c)

    @property
    def matrix(self):
        return hat_matrix(self.coords, self.group_tag)


@dataclass(frozen=True, eq=False)
class CoAlgebraElement:
    """Dual element (momentum or constraint row) in dual-basis coordinates."""

    group_tag: str
    coords: np.ndarray

    def __post_init__(self):
        _check_tag(self.group_tag)
        c = np.array(self.coords, dtype=float)
        n = _ALG_DIM[self.group_tag]
        if c.shape != (n,):
            raise ValueError(f"{self.group_tag} dual coordinates must have shape ({n},)")
        c.setflags(write=False)
        object.__setattr__(self, "coords", c)

    @property
    def matrix(self):
        """Matrix form against the trace pairing (the dual-basis expansion)."""
        return np.einsum("k,kij->ij", self.coords, dual_basis_matrices(self.group_tag))


def hat(v, group_tag):
    return AlgebraElement(group_tag, v)


def vee(xi: AlgebraElement):
    return np.asarray(xi.coords)


def identity(group_tag):
    return GroupElement(group_tag, np.eye(matrix_dim(group_tag)))


def _same_tag(a, b):
    if a.group_tag != b.group_tag:
        raise ValueError(f"group tag mismatch: {a.group_tag} vs {b.group_tag}")


def compose(g: GroupElement, h: GroupElement):
    """Group product g*h, which is also the left translation of h by g."""
    _same_tag(g, h)
    return GroupElement(g.group_tag, g.matrix @ h.matrix)


def inverse(g: GroupElement):
    if g.group_tag == SO3:
        return GroupElement(SO3, g.matrix.T)
    R = g.rotation
    return GroupElement.from_parts(g.group_tag, R.T, -R.T @ g.translation)


def _rot_coeffs(theta):
    # sin(t)/t, (1-cos(t))/t^2, (t-sin(t))/t^3 with series fallback near 0
    if theta < 1e-8:
        t2 = theta * theta
        return 1.0 - t2 / 6.0, 0.5 - t2 / 24.0, 1.0 / 6.0 - t2 / 120.0
    s, c = np.sin(theta), np.cos(theta)
    return s / theta, (1.0 - c) / (theta * theta), (theta - s) / (theta * theta * theta)


def _so3_exp(w):
    theta = np.linalg.norm(w)
    a, b, _ = _rot_coeffs(theta)
    W = _skew3(w)
    return np.eye(3) + a * W + b * (W @ W)


def exp_map(xi: AlgebraElement):
    """Group exponential, closed form for each supported group."""
    tag = xi.group_tag
    v = xi.coords
    if tag == SO3:
        return GroupElement(SO3, _so3_exp(v))
    if tag == SE3:
        w = v[3:]
        theta = np.linalg.norm(w)
        _, b, c = _rot_coeffs(theta)
        W = _skew3(w)
        V = np.eye(3) + b * W + c * (W @ W)
        return GroupElement.from_parts(SE3, _so3_exp(w), V @ v[:3])
    # SE(2): rotation by w plus the planar V-matrix acting on (v1, v2)
    w = v[2]
    theta = abs(w)
    a, b, _ = _rot_coeffs(theta)
    R = np.array([[np.cos(w), -np.sin(w)], [np.sin(w), np.cos(w)]])
    V = np.array([[a, -b * w], [b * w, a]])
    return GroupElement.from_parts(SE2, R, V @ v[:2])


def pairing(mu: CoAlgebraElement, xi: AlgebraElement):
    """Canonical pairing <mu, xi>, the dot product of coordinates."""
    _same_tag(mu, xi)
    return float(np.dot(mu.coords, xi.coords))


def pairing_trace(mu: CoAlgebraElement, xi: AlgebraElement):
    """The trace-pairing view tr(mu_matrix * xi_matrix); equals ``pairing``."""
    _same_tag(mu, xi)
    return float(np.trace(mu.matrix @ xi.matrix))


def Ad(g: GroupElement, xi: AlgebraElement):
    """Adjoint action g xi g^-1."""
    _same_tag(g, xi)
    conj = g.matrix @ xi.matrix @ inverse(g).matrix
    return AlgebraElement(g.group_tag, vee_matrix(conj, g.group_tag))


def ad(xi: AlgebraElement, eta: AlgebraElement):
    """Lie bracket ad_xi(eta) = xi eta - eta xi."""
    _same_tag(xi, eta)
    comm = xi.matrix @ eta.matrix - eta.matrix @ xi.matrix
    return AlgebraElement(xi.group_tag, vee_matrix(comm, xi.group_tag))


def Ad_matrix(g: GroupElement):
    """Matrix of Ad_g in the fixed basis (columns are Ad_g of basis vectors)."""
    n = _ALG_DIM[g.group_tag]
    ginv = inverse(g).matrix
    B = basis_matrices(g.group_tag)
    cols = [vee_matrix(g.matrix @ B[s] @ ginv, g.group_tag) for s in range(n)]
    return np.column_stack(cols)


def ad_matrix(xi: AlgebraElement):
    """Matrix of ad_xi in the fixed basis."""
    n = _ALG_DIM[xi.group_tag]
    X = xi.matrix
    B = basis_matrices(xi.group_tag)
    cols = [vee_matrix(X @ B[s] - B[s] @ X, xi.group_tag) for s in range(n)]
    return np.column_stack(cols)


def coAd(g: GroupElement, mu: CoAlgebraElement):
    """Co-Adjoint action defined by <coAd(g, mu), xi> = <mu, Ad(g, xi)>."""
    _same_tag(g, mu)
    return CoAlgebraElement(g.group_tag, Ad_matrix(g).T @ mu.coords)


def coad(xi: AlgebraElement, mu: CoAlgebraElement):
    """Infinitesimal co-adjoint: <coad(xi, mu), eta> = <mu, ad(xi, eta)>."""
    _same_tag(xi, mu)
    return CoAlgebraElement(xi.group_tag, ad_matrix(xi).T @ mu.coords)


class ProductElement:
    """A tuple of group elements, one per agent, all on the same group."""

    __slots__ = ("factors",)

    def __init__(self, factors):
        factors = tuple(factors)
        if not factors:
            raise ValueError("product element needs at least one factor")
        tags = {f.group_tag for f in factors}
        if len(tags) != 1:
            raise ValueError("all factors must share one group tag")
        self.factors = factors

    @property
    def group_tag(self):
        return self.factors[0].group_tag

    def __len__(self):
        return len(self.factors)

    def __getitem__(self, i):
        return self.factors[i]

    def __iter__(self):
        return iter(self.factors)


class ProductAlgebraElement:
    """Stacked algebra coordinates for a product group, bracket componentwise."""

    __slots__ = ("group_tag", "coords", "r")

    def __init__(self, group_tag, coords):
        _check_tag(group_tag)
        c = np.array(coords, dtype=float)
        n = _ALG_DIM[group_tag]
        if c.ndim == 1:
            if c.size % n:
                raise ValueError(f"stacked coordinates must be a multiple of {n} long")
            c = c.reshape(-1, n)
        if c.ndim != 2 or c.shape[1] != n:
            raise ValueError(f"expected (r, {n}) coordinates, got {c.shape}")
        c.setflags(write=False)
        self.group_tag = group_tag
        self.coords = c
        self.r = c.shape[0]

    def factor(self, i):
        return AlgebraElement(self.group_tag, self.coords[i])

    def stacked(self):
        return self.coords.reshape(-1)

    def bracket(self, other):
        if self.group_tag != other.group_tag or self.r != other.r:
            raise ValueError("product algebra elements do not match")
        rows = [vee(ad(self.factor(i), other.factor(i))) for i in range(self.r)]
        return ProductAlgebraElement(self.group_tag, np.vstack(rows))
