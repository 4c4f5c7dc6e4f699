"""Shared builders for the test suite: rational patches and random refinements."""
import numpy as np

from lrcontact.lr import HORIZONTAL, VERTICAL, LRMesh, Meshline, MeshError
from lrcontact.lr.build import open_uniform_knots, sphere_octant, subdivide


def wavy_patch(p, n=3, seed=0):
    """Open tensor patch of degree ``p`` with curved geometry and uneven weights."""
    rng = np.random.default_rng(seed)
    k = open_uniform_knots(n, p)
    m = n + p
    g = np.linspace(0.0, 1.0, m)
    X, Y = np.meshgrid(g, g, indexing="ij")
    Z = 0.2 * np.sin(3 * X) * np.cos(2 * Y) + 0.05 * rng.standard_normal(X.shape)
    w = rng.uniform(0.6, 1.6, X.shape)
    cp = np.concatenate([np.stack([X, Y, Z], -1) * w[..., None], w[..., None]], -1)
    return LRMesh.tensor(k, k, p, p, cp)


def octant_patch(n=3):
    return subdivide(sphere_octant(1.0), n, n)


def _strip(mesh, direction, c):
    """Element spans crossed by the full line at ``c``, sorted along it."""
    if direction == VERTICAL:
        return sorted((v0, v1) for u0, u1, v0, v1 in mesh.elements if u0 < c < u1)
    return sorted((u0, u1) for u0, u1, v0, v1 in mesh.elements if v0 < c < v1)


def random_line(mesh, rng):
    """A candidate primitive meshline.

    Mostly a line bisecting a random element and spanning ``p + 1``
    consecutive elements; otherwise a one-element elongation of an
    existing interior line.
    """
    p = mesh.p
    if rng.random() < 0.2:
        u0, u1, v0, v1 = mesh.domain
        lines = [ln for ln in mesh.meshlines
                 if (u0 < ln.fixed < u1 if ln.direction == VERTICAL else v0 < ln.fixed < v1)]
        if lines:
            ln = lines[int(rng.integers(len(lines)))]
            spans = _strip(mesh, ln.direction, ln.fixed + 1e-9)
            before = [s for s in spans if s[1] <= ln.start + 1e-12]
            after = [s for s in spans if s[0] >= ln.end - 1e-12]
            if rng.random() < 0.5 and before:
                return Meshline(ln.direction, ln.fixed, before[-1][0], ln.end)
            if after:
                return Meshline(ln.direction, ln.fixed, ln.start, after[0][1])
    e = int(rng.integers(len(mesh.elements)))
    u0, u1, v0, v1 = mesh.elements[e]
    direction = VERTICAL if rng.random() < 0.5 else HORIZONTAL
    c = 0.5 * (u0 + u1) if direction == VERTICAL else 0.5 * (v0 + v1)
    spans = _strip(mesh, direction, c)
    i = spans.index((v0, v1) if direction == VERTICAL else (u0, u1))
    a = max(0, i - int(rng.integers(p + 1)))
    b = min(len(spans), a + p + 1)
    a = max(0, b - p - 1)
    return Meshline(direction, c, spans[a][0], spans[b - 1][1])


def support_line(mesh, rng):
    """Bisect a random element across the support of a random function on it."""
    e = int(rng.integers(len(mesh.elements)))
    u0, u1, v0, v1 = mesh.elements[e]
    f = mesh.functions[mesh.keys()[int(rng.choice(mesh.element_functions(mesh.elements[e])))]]
    frac = rng.choice([0.5, 0.25, 0.75])
    if rng.random() < 0.5:
        return Meshline(VERTICAL, u0 + frac * (u1 - u0), f.kv_eta[0], f.kv_eta[-1])
    return Meshline(HORIZONTAL, v0 + frac * (v1 - v0), f.kv_xi[0], f.kv_xi[-1])


def random_refinement(mesh, n_lines, seed, max_tries=20, generator=random_line):
    """Insert ``n_lines`` random meshlines accepted by the mesh; returns them."""
    rng = np.random.default_rng(seed)
    lines = []
    while len(lines) < n_lines:
        for _ in range(max_tries):
            line = generator(mesh, rng)
            try:
                if mesh.insert(line):
                    lines.append(line)
                    break
            except MeshError:
                continue
        else:
            raise RuntimeError("no primitive meshline found")
    return lines


def sample_points(mesh, n, seed):
    rng = np.random.default_rng(seed)
    u0, u1, v0, v1 = mesh.domain
    return u0 + (u1 - u0) * rng.random(n), v0 + (v1 - v0) * rng.random(n)


# ------------------------------------------------------------ FD consistency
def consistency_setup(seed, p=3):
    """Locally refined pre-stretched sheet in a random deformed state under a sphere."""
    from lrcontact.contact import ContactParams, RigidSphere, contact_force
    from lrcontact.lr.build import flat_sheet
    from lrcontact.membrane import MembraneModel

    rng = np.random.default_rng(seed)
    m = flat_sheet(2.0, 2.0, 4, 4, p)
    m.insert(Meshline(VERTICAL, 1.5, 0.0, 4.0))
    m.insert(Meshline(HORIZONTAL, 1.5, 0.0, 3.0 if p == 3 else 4.0))
    model = MembraneModel(m, mu=1.0, nq=4, prestretch=1.1, volume_factor=1.0)
    x = model.reference_x() + 0.03 * rng.standard_normal((m.n_functions, 3))
    x[:, 2] -= 0.1 * np.exp(-((x[:, 0] - 1) ** 2 + (x[:, 1] - 1) ** 2))
    cp = ContactParams(10.0, p)
    c = np.array([1.0 + 0.2 * rng.standard_normal(), 1.0 + 0.2 * rng.standard_normal(), 0.85])
    # the penalty force has a kink at zero gap; keep every point clear of it
    while True:
        sphere = RigidSphere(tuple(c), 1.0)
        gap = contact_force(model.disc, x, sphere, cp, tangent=False).gap
        if np.abs(gap).min() > 1e-4:
            return model, x, sphere, cp, rng
        c[2] += 3e-4


def _fd_columns(fun, x, cols, h):
    out = []
    for j in cols:
        xp = x.ravel().copy()
        xm = x.ravel().copy()
        xp[j] += h
        xm[j] -= h
        out.append((fun(xp.reshape(x.shape)) - fun(xm.reshape(x.shape))) / (2 * h))
    return np.array(out).T


def significant_columns(K, rel=1e-3):
    """Columns whose norm is at least ``rel`` times the largest column norm."""
    K = K.toarray() if hasattr(K, "toarray") else np.atleast_2d(np.asarray(K))
    cn = np.linalg.norm(K, axis=0)
    return np.flatnonzero(cn >= rel * cn.max())


def column_errors(K, fun, x, cols, h=1e-6):
    """Relative column errors ||FD - K e_j|| / ||K e_j|| for the chosen columns."""
    fd = _fd_columns(fun, x, cols, h)
    K = K.toarray() if hasattr(K, "toarray") else np.asarray(K)
    if K.ndim == 1:
        K = K[None, :]
        fd = fd[None, :]
    Kc = K[:, cols]
    return np.linalg.norm(fd - Kc, axis=0) / np.linalg.norm(Kc, axis=0)


def term_errors(seed, n_cols=12):
    """Max relative FD column error of each tangent term at one random state.

    Columns are drawn among those carrying at least 1e-3 of the largest
    column norm of the term; tinier columns sit at the round-off floor.
    """
    from lrcontact.contact import contact_force

    model, x, sphere, cp, rng = consistency_setup(seed)
    d = model.disc
    p = 0.7
    _, _, K = model.internal(x)
    _, g, H = model.volume(x)
    res = contact_force(d, x, sphere, cp)
    terms = {
        "membrane": (K, lambda y: model.internal(y, False)[1]),
        "pressure": (p * H, lambda y: p * model.volume(y, False)[1]),
        "volume": (g, lambda y: np.array([model.volume(y, False)[0]])),
        "contact": (res.stiffness, lambda y: contact_force(d, y, sphere, cp, False).force),
    }
    out = {}
    for name, (T, fun) in terms.items():
        sig = significant_columns(T)
        cols = rng.choice(sig, min(n_cols, sig.size), replace=False)
        out[name] = float(column_errors(T, fun, x, cols).max())
    out["active_points"] = int((res.gap < 0).sum())
    return out


# ---------------------------------------------------------------- acceptance
ACCEPTANCE = {}


def report(criterion, ok, text):
    """Record and print one acceptance line."""
    line = f"criterion {criterion}: {'PASS' if ok else 'FAIL'}  {text}"
    ACCEPTANCE[criterion] = line
    print(line)
    return ok


def load_snapshot(path):
    """Mesh and deformed positions stored in a ``mesh_<step>.json`` file."""
    from lrcontact.lr.io import load_mesh

    mesh = load_mesh(path)
    h = mesh.get_aux()[:, 0]
    return mesh, h[:, :3] / h[:, 3:4]


def operator_errors(mesh, npts=7, seed=0):
    """Extraction operators against direct evaluation on every element.

    Returns the largest value error, the largest raw parametric derivative
    error with the derivative magnitude it occurred at, the largest
    derivative error in element-local coordinates (scaled by the element
    width; parametric derivatives grow like 1/h), and the number of
    element functions whose support exceeds p+1 widths of the element.
    """
    from lrcontact.bezier import element_operator

    rng = np.random.default_rng(seed)
    out = {"value": 0.0, "derivative": 0.0, "derivative_scale": 0.0, "local_derivative": 0.0, "wide": 0}
    for e, (u0, u1, v0, v1) in enumerate(mesh.elements):
        op = element_operator(mesh, e)
        t, s = rng.random(npts), rng.random(npts)
        b, bx, by = op.basis(t, s)
        B, Bx, By = mesh.basis_matrix(u0 + (u1 - u0) * t, v0 + (v1 - v0) * s, derivatives=True)
        g = op.gammas[:, None]
        f = op.functions
        dx, dy = np.abs(g * bx - Bx[:, f].T), np.abs(g * by - By[:, f].T)
        out["value"] = max(out["value"], np.abs(g * b - B[:, f].T).max())
        raw = max(dx.max(), dy.max())
        if raw > out["derivative"]:
            out["derivative"] = raw
            out["derivative_scale"] = max(np.abs(Bx).max(), np.abs(By).max())
        out["local_derivative"] = max(out["local_derivative"], (u1 - u0) * dx.max(), (v1 - v0) * dy.max())
        other = np.setdiff1d(np.arange(mesh.n_functions), f)
        assert np.abs(B[:, other]).max(initial=0.0) == 0.0
        sup = mesh.support_arrays()[f]
        out["wide"] += int(np.sum(sup[:, 1] - sup[:, 0] > (u1 - u0) * (mesh.p + 1) + 1e-12))
    return out
