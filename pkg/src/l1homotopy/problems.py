"""Test-problem generators: matrices, signals, corruption and wavelets.

Every random draw goes through ``rng(seed, *stream)``, a numpy Generator
on the Philox 4x64 counter-based bit generator keyed by a SeedSequence, so
a (seed, stream) pair gives the same numbers on every platform.
"""
from dataclasses import dataclass

import numpy as np

from .errors import BadLength, ConfigError, FormatError

# canonical layouts (fractions of the signal length)
BLOCKS_BREAKS = np.array([0.10, 0.13, 0.15, 0.23, 0.25, 0.40, 0.44, 0.65, 0.76, 0.78, 0.81])
BLOCKS_HEIGHTS = np.array([4.0, -5.0, 3.0, -4.0, 5.0, -4.2, 2.1, 4.3, -3.1, 2.1, -4.2])
PCWPOLY_BREAKS = np.array([0.0, 0.18, 0.37, 0.52, 0.71, 0.86, 1.0])
# knot values and slopes of a periodic C^1 cubic spline (last knot = first)
PCWPOLY_VALUES = np.array([0.0, 1.6, -0.8, 0.9, 2.2, -1.2, 0.0])
PCWPOLY_SLOPES = np.array([4.0, -6.0, 3.0, 10.0, -8.0, 5.0, 4.0])


def _hermite_coefs():
    """Local cubic coefficients c0 + c1 u + c2 u^2 + c3 u^3 per piece, u in [0, 1)."""
    h = np.diff(PCWPOLY_BREAKS)
    v0, v1 = PCWPOLY_VALUES[:-1], PCWPOLY_VALUES[1:]
    m0, m1 = PCWPOLY_SLOPES[:-1] * h, PCWPOLY_SLOPES[1:] * h
    return np.column_stack([v0, m0, 3 * (v1 - v0) - 2 * m0 - m1, 2 * (v0 - v1) + m0 + m1])


PCWPOLY_COEFS = _hermite_coefs()

HAAR = np.array([1.0, 1.0]) / np.sqrt(2.0)
DAUB8 = np.array([
    0.2303778133088964, 0.7148465705529154, 0.6308807679298587, -0.0279837694168599,
    -0.1870348117190931, 0.0308413818355607, 0.0328830116668852, -0.0105974017850690,
])
FAMILIES = {"haar": HAAR, "daub8": DAUB8}


def parse_seed(text):
    """Decimal or 0x-prefixed hexadecimal, in [0, 2**64)."""
    if isinstance(text, (int, np.integer)):
        val = int(text)
    else:
        t = str(text).strip().lower()
        try:
            val = int(t, 16) if t.startswith("0x") else int(t, 10)
        except ValueError:
            raise ConfigError("seed", f"cannot parse {text!r}") from None
    if not 0 <= val < 2**64:
        raise ConfigError("seed", f"{val} is outside [0, 2^64)")
    return val


def rng(seed, *stream):
    ss = np.random.SeedSequence(parse_seed(seed), spawn_key=tuple(int(s) for s in stream))
    return np.random.Generator(np.random.Philox(ss))


def _gen(seed):
    return seed if isinstance(seed, np.random.Generator) else rng(seed)


@dataclass
class ProblemInstance:
    A: np.ndarray
    x: np.ndarray
    y: np.ndarray
    sigma: float
    seed: int


def gaussian_matrix(m, n, seed):
    if m < 1 or n < 1:
        raise ConfigError("shape", f"({m}, {n}) must be positive")
    return _gen(seed).standard_normal((m, n)) / np.sqrt(m)


def orthonormal_matrix(m, n, seed):
    """Gaussian matrix with orthonormalized columns (m >= n)."""
    if m < n:
        raise ConfigError("shape", f"need m >= n, got ({m}, {n})")
    Q, R = np.linalg.qr(_gen(seed).standard_normal((m, n)))
    return Q * np.sign(np.diag(R))


def spike_signal(n, K, seed):
    if not 0 <= K <= n:
        raise ConfigError("K", f"{K} not in [0, {n}]")
    g = _gen(seed)
    x = np.zeros(n)
    idx = g.choice(n, K, replace=False)
    x[idx] = g.choice([-1.0, 1.0], K)
    return x


def draw_kn(K, seed):
    """Number of new spikes, uniform over the integers in [0, K/20]."""
    return int(_gen(seed).integers(0, K // 20 + 1))


def perturb_spikes(x, Kn, seed, sigma=0.1):
    """Jitter the nonzeros by N(0, sigma^2) and add Kn new N(0, 1) entries."""
    g = _gen(seed)
    x = np.asarray(x, dtype=float).copy()
    on = np.flatnonzero(x)
    x[on] += sigma * g.standard_normal(on.size)
    off = np.flatnonzero(x == 0)
    if Kn > off.size:
        raise ConfigError("Kn", f"{Kn} new entries but only {off.size} free slots")
    new = g.choice(off, Kn, replace=False)
    x[new] = g.standard_normal(Kn)
    return x


def make_instance(m, n, K, sigma, seed):
    g = rng(seed)
    A = gaussian_matrix(m, n, g)
    x = spike_signal(n, K, g)
    y = A @ x + sigma * g.standard_normal(m)
    return ProblemInstance(A, x, y, float(sigma), parse_seed(seed))


def _check_pow2(n):
    if n < 1 or n & (n - 1):
        raise BadLength(f"length {n} is not a power of two")


def blocks_signal(n, seed=None, heights=None):
    """Piecewise-constant signal; a seed scales each jump by U(0.8, 1.2).

    ``heights`` replaces the canonical jump sizes, so a sequence of signals
    can be built by feeding back ``blocks_heights`` of the previous one.
    """
    _check_pow2(n)
    h = blocks_heights(seed, heights)
    t = np.arange(n) / n
    return (h[None, :] * (t[:, None] >= BLOCKS_BREAKS[None, :])).sum(axis=1)


def blocks_heights(seed=None, heights=None):
    h = (BLOCKS_HEIGHTS if heights is None else np.asarray(heights, dtype=float)).copy()
    if h.shape != BLOCKS_HEIGHTS.shape:
        raise ConfigError("heights", f"need {BLOCKS_HEIGHTS.size} jump sizes")
    if seed is not None:
        h *= _gen(seed).uniform(0.8, 1.2, h.size)
    return h


def pcwpoly_signal(n, seed=None, sigma=0.01, coefs=None):
    """Piecewise-cubic signal; a seed adds N(0, sigma^2) to every coefficient."""
    _check_pow2(n)
    C = pcwpoly_coefs(seed, sigma, coefs)
    t = np.arange(n) / n
    piece = np.searchsorted(PCWPOLY_BREAKS, t, side="right") - 1
    lo = PCWPOLY_BREAKS[piece]
    u = (t - lo) / (PCWPOLY_BREAKS[piece + 1] - lo)
    c = C[piece]
    return c[:, 0] + u * (c[:, 1] + u * (c[:, 2] + u * c[:, 3]))


def pcwpoly_coefs(seed=None, sigma=0.01, coefs=None):
    C = (PCWPOLY_COEFS if coefs is None else np.asarray(coefs, dtype=float)).copy()
    if C.shape != PCWPOLY_COEFS.shape:
        raise ConfigError("coefs", f"need a {PCWPOLY_COEFS.shape} coefficient table")
    if seed is not None:
        C += sigma * _gen(seed).standard_normal(C.shape)
    return C


def _filters(family):
    try:
        h = FAMILIES[family]
    except KeyError:
        raise ConfigError("family", f"unknown wavelet {family!r}") from None
    L = h.size
    g = h[::-1] * np.where(np.arange(L) % 2 == 0, 1.0, -1.0)
    return h, g


def _taps(length, L):
    return (2 * np.arange(length // 2)[:, None] + np.arange(L)[None, :]) % length


def wavelet_analysis(signal, family="haar"):
    """Periodic orthonormal DWT to full depth: [scaling, coarsest ... finest details]."""
    a = np.asarray(signal, dtype=float).copy()
    n = a.size
    _check_pow2(n)
    h, g = _filters(family)
    out = np.empty(n)
    length = n
    while length > 1:
        seg = a[:length]
        idx = _taps(length, h.size)
        lo, hi = seg[idx] @ h, seg[idx] @ g
        out[length // 2:length] = hi
        a[:length // 2] = lo
        length //= 2
    out[0] = a[0]
    return out


def wavelet_synthesis(coefs, family="haar"):
    w = np.asarray(coefs, dtype=float)
    n = w.size
    _check_pow2(n)
    h, g = _filters(family)
    a = w[:1].copy()
    length = 2
    while length <= n:
        idx = _taps(length, h.size)
        hi = w[length // 2:length]
        nxt = np.zeros(length)
        np.add.at(nxt, idx, a[:, None] * h[None, :] + hi[:, None] * g[None, :])
        a = nxt
        length *= 2
    return a


def wavelet_matrix(n, family="haar"):
    """Synthesis matrix W^T (columns are basis functions)."""
    return np.column_stack([wavelet_synthesis(e, family) for e in np.eye(n)])


def corrupt_codeword(codeword, mode, param, seed):
    """Zero out entries: ``zero_k`` picks exactly ``param`` of them, ``bernoulli`` each with prob ``param``."""
    v = np.asarray(codeword, dtype=float).copy()
    g = _gen(seed)
    if mode == "zero_k":
        K = int(param)
        if not 0 <= K <= v.size:
            raise ConfigError("K", f"{K} not in [0, {v.size}]")
        idx = np.sort(g.choice(v.size, K, replace=False))
    elif mode == "bernoulli":
        if not 0 <= param <= 1:
            raise ConfigError("rate", f"{param} not in [0, 1]")
        idx = np.flatnonzero(g.random(v.size) < param)
    else:
        raise ConfigError("mode", f"unknown corruption mode {mode!r}")
    v[idx] = 0.0
    return v, idx


def synthetic_image(n, seed=None):
    """Piecewise-smooth n x n test image standing in for a photograph."""
    _check_pow2(n)
    t = np.arange(n) / n
    X, Y = np.meshgrid(t, t, indexing="ij")
    img = 0.4 + 0.3 * np.sin(3 * X + 2 * Y)
    img += 0.5 * ((X - 0.45) ** 2 + (Y - 0.55) ** 2 < 0.06)
    img -= 0.3 * ((X > 0.15) & (X < 0.35) & (Y > 0.1) & (Y < 0.8))
    img += 0.2 * (Y > 0.7 + 0.1 * X)
    if seed is not None:
        img += 0.01 * _gen(seed).standard_normal(img.shape)
    return img


def _pgm_tokens(data):
    pos = 0
    out = []
    while len(out) < 4:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if data[pos:pos + 1] == b"#":
            while pos < len(data) and data[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        if start == pos:
            raise FormatError("truncated PGM header")
        out.append(data[start:pos])
    return out, pos + 1


def read_pgm(path):
    """Plain (P2) or raw (P5) graymap as a float array."""
    with open(path, "rb") as fh:
        data = fh.read()
    (magic, w, h, mx), pos = _pgm_tokens(data)
    try:
        w, h, mx = int(w), int(h), int(mx)
    except ValueError:
        raise FormatError("non-numeric PGM header") from None
    if magic == b"P2":
        vals = np.array(data[pos:].split()[: w * h], dtype=float)
    elif magic == b"P5":
        dt = np.dtype(">u2") if mx > 255 else np.dtype("u1")
        vals = np.frombuffer(data, dtype=dt, count=w * h, offset=pos).astype(float)
    else:
        raise FormatError(f"not a PGM file (magic {magic!r})")
    if vals.size != w * h:
        raise FormatError("PGM pixel data is short")
    return vals.reshape(h, w)
