"""Operator-valued Sylvester solvers.

Three routes to f solving  source + [f, H0] - shift*f = 0:

* :func:`solve_dense` — eigenbasis of H0, exact at desk scale;
* :func:`green_rule_solve` — closed-form prefactor for quadratic, diagonal H0;
* :func:`hubbard_micromotion` — analytic hopping-order expansion of the
  driven Hubbard chain's micro-motion, assembled term-by-term from closed
  forms (densities dressed by beta/gamma/delta coefficient ladders).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ResonantDenominator
from .fock import (HubbardParams, SectorBasis, SparseOperator, TermSum,
                   commutator)

__all__ = [
    "HarmonicSeries",
    "MicroMotion",
    "HopExpansionCoeffs",
    "solve_dense",
    "green_rule_solve",
    "sylvester_residual",
    "hubbard_micromotion",
    "hubbard_micromotion_terms",
    "solve_order2",
    "default_resonance_tol",
]


def default_resonance_tol(shift):
    """Default resonance tolerance: 1e-8 relative to the shift scale."""
    return 1e-8 * max(abs(shift), 1.0)


# ---------------------------------------------------------------------------
# harmonic containers


def _is_operator(v):
    return isinstance(v, SparseOperator)


def _pairing_dev(op_minus, op_plus_dagger, sign):
    d = op_minus.matrix - sign * op_plus_dagger.matrix
    return float(np.abs(d.data).max()) if d.nnz else 0.0


@dataclass
class HarmonicSeries:
    """Fourier components of a driven Hamiltonian: (order n, harmonic j) -> op.

    Values are SparseOperators, or TermSums for basis-free assembly (call
    :meth:`materialize` to obtain operators; Hermiticity validation of
    term-valued series happens at that point).
    """

    terms: dict
    omega: float
    meta: dict = field(default_factory=dict)

    HERM_TOL = 1e-13

    def __post_init__(self):
        if not self.omega > 0:
            raise ValueError(f"omega must be positive, got {self.omega}")
        for (n, j) in self.terms:
            if n < 0:
                raise ValueError(f"order must be >= 0, got {n}")
            if n == 0 and j != 0:
                raise ValueError("order-0 entry exists only at j=0, "
                                 f"got harmonic {j}")
        if all(_is_operator(v) for v in self.terms.values()):
            self._check_hermitian_pairs()

    def _check_hermitian_pairs(self):
        for (n, j), op in self.terms.items():
            scale = max(op.max_abs(), 1.0)
            if j == 0:
                if not op.hermitian:
                    raise ValueError(f"harmonic (n={n}, j=0) must be Hermitian")
                continue
            partner = self.terms.get((n, -j))
            if partner is None:
                raise ValueError(f"harmonic (n={n}, j={j}) lacks its "
                                 f"(n={n}, j={-j}) Hermitian partner")
            if _pairing_dev(partner, op.dagger(), +1.0) > self.HERM_TOL * scale:
                raise ValueError(
                    f"harmonics (n={n}, j=+-{abs(j)}) are not mutually adjoint")

    def materialize(self, basis: SectorBasis):
        out = {}
        for key, v in self.terms.items():
            out[key] = v if _is_operator(v) else v.to_operator(basis)
        return HarmonicSeries(terms=out, omega=self.omega,
                              meta=dict(self.meta))

    def harmonic(self, j):
        """Sum all orders at harmonic j (operator-valued series only)."""
        ops = [v for (n, jj), v in self.terms.items() if jj == j]
        if not ops:
            raise KeyError(f"no entries at harmonic {j}")
        total = ops[0]
        for op in ops[1:]:
            total = total + op
        return total

    def harmonics(self):
        return sorted({j for (_, j) in self.terms})


@dataclass
class MicroMotion:
    """Micro-motion Fourier components: (order n >= 1, harmonic j != 0) -> op.

    Anti-Hermitian pairing f(n,j) = -f(n,-j)^dagger is enforced at 1e-12
    relative tolerance.
    """

    terms: dict
    omega: float

    ANTIHERM_TOL = 1e-12

    def __post_init__(self):
        if not self.omega > 0:
            raise ValueError(f"omega must be positive, got {self.omega}")
        for (n, j), op in self.terms.items():
            if n < 1:
                raise ValueError(f"micro-motion order must be >= 1, got {n}")
            if j == 0:
                raise ValueError("micro-motion has no static (j=0) part")
            partner = self.terms.get((n, -j))
            if partner is None:
                raise ValueError(f"micro-motion (n={n}, j={j}) lacks its "
                                 f"(n={n}, j={-j}) partner")
            scale = max(op.max_abs(), 1.0)
            if _pairing_dev(partner, op.dagger(), -1.0) > self.ANTIHERM_TOL * scale:
                raise ValueError(
                    f"micro-motion (n={n}, j=+-{abs(j)}) breaks "
                    f"f(n,j) = -f(n,-j)^dagger")

    def __getitem__(self, key):
        return self.terms[key]


# ---------------------------------------------------------------------------
# dense eigenbasis route


def solve_dense(H0: SparseOperator, source: SparseOperator, shift,
                tol=None):
    """Solve source + [f, H0] - shift*f = 0 in the eigenbasis of H0.

    In the eigenbasis, f_{l,l'} = source_{l,l'} / (shift - (e_{l'} - e_l)).
    A denominator smaller than ``tol`` under a nonzero source element raises
    ResonantDenominator listing the offending level pairs.
    """
    if tol is None:
        tol = default_resonance_tol(shift)
    eps, V = np.linalg.eigh(H0.to_dense())
    S = V.conj().T @ source.to_dense() @ V
    denom = shift - (eps[None, :] - eps[:, None])
    floor = 1e-12 * max(np.abs(S).max(), 1e-300)
    small = np.abs(denom) < tol
    bad = small & (np.abs(S) > floor)
    if bad.any():
        pairs = np.argwhere(bad)
        msg = ", ".join(
            f"(l={l}, l'={lp}, e_l={eps[l]:.6g}, e_l'={eps[lp]:.6g}, "
            f"denom={denom[l, lp]:.3e})"
            for l, lp in pairs[:8])
        raise ResonantDenominator(
            f"shift {shift:.6g} resonant with {len(pairs)} level pair(s): {msg}")
    F = np.where(small, 0.0, S / np.where(small, 1.0, denom))
    f = V @ F @ V.conj().T
    return SparseOperator(f, basis=H0.basis or source.basis)


def green_rule_solve(mode_energies, source_monomial, shift, tol=None):
    """Green-function prefactor for a monomial source over a quadratic H0.

    ``source_monomial`` is (created, annihilated): index lists into
    ``mode_energies``.  Returns 1/(shift + sum(eps created) - sum(eps
    annihilated)).
    """
    if tol is None:
        tol = default_resonance_tol(shift)
    eps = np.asarray(mode_energies, dtype=float)
    created, annihilated = source_monomial
    den = shift + sum(eps[i] for i in created) - sum(eps[j] for j in annihilated)
    if abs(den) < tol:
        raise ResonantDenominator(
            f"green rule denominator {den:.3e} below tol {tol:.3e} "
            f"for monomial (created={list(created)}, "
            f"annihilated={list(annihilated)})")
    return 1.0 / complex(den)


def sylvester_residual(f: SparseOperator, H0: SparseOperator,
                       source: SparseOperator, shift):
    """Frobenius norm of source + [f, H0] - shift*f."""
    r = source + commutator(f, H0) - complex(shift) * f
    return r.fro_norm()


# ---------------------------------------------------------------------------
# hopping-expansion coefficient ladder


def _corner_extract(fn):
    """beta/gamma/delta of a density polynomial from its {0,1}^2 corners."""
    f00 = fn(0.0, 0.0)
    beta = fn(1.0, 0.0) - f00
    gamma = fn(0.0, 1.0) - f00
    delta = fn(1.0, 1.0) - fn(1.0, 0.0) - fn(0.0, 1.0) + f00
    return f00, beta, gamma, delta


@dataclass(frozen=True)
class HopExpansionCoeffs:
    """Density-dressing coefficients of the hopping expansion.

    beta/gamma/delta: first-order ladder; beta_dd/...: the same at doubled
    frequency; beta2/...: the two-photon level; beta3/... and beta4/...: the
    third- and fourth-order ladders entering f(3,1) and the g^4 Hamiltonian.
    """

    beta: float
    gamma: float
    delta: float
    beta_dd: float
    gamma_dd: float
    delta_dd: float
    beta2: float
    gamma2: float
    delta2: float
    beta3: float
    gamma3: float
    delta3: float
    beta4: float
    gamma4: float
    delta4: float

    @classmethod
    def from_model(cls, U, omega, tol=None):
        if not omega > 0:
            raise ValueError(f"omega must be positive, got {omega}")
        if tol is None:
            tol = 1e-8 * omega
        for den, label in ((omega - U, "omega = U"),
                           (omega + U, "omega = -U"),
                           (2 * omega - U, "omega = U/2"),
                           (2 * omega + U, "omega = -U/2")):
            if abs(den) < tol:
                raise ResonantDenominator(
                    f"coefficient ladder diverges near {label} "
                    f"(U={U}, omega={omega})")
        beta = -U / (omega + U)
        gamma = U / (omega - U)
        delta = -beta - gamma
        beta_dd = -U / (2 * omega + U)
        gamma_dd = U / (2 * omega - U)
        delta_dd = -beta_dd - gamma_dd

        beta2 = beta + beta_dd + beta * beta_dd
        gamma2 = gamma + gamma_dd + gamma * gamma_dd
        delta2 = (delta + delta_dd
                  + gamma * beta_dd + gamma_dd * beta
                  + gamma * delta_dd + gamma_dd * delta
                  + beta * delta_dd + beta_dd * delta
                  + delta * delta_dd)

        def pprime(a, b):
            return 1.0 + beta * a + gamma * b + delta * a * b

        def f3(a, b):
            pp = pprime(a, b)
            return (pp * pp * (-1.0 + beta_dd * a + gamma_dd * b
                               + delta_dd * a * b) / 8.0
                    - pp * pp / 3.0)

        f00, beta3, gamma3, delta3 = _corner_extract(f3)
        assert abs(f00 + 11.0 / 24.0) < 1e-12

        beta4 = beta3 + beta2 / 24.0 + beta / 6.0
        gamma4 = gamma3 + gamma2 / 24.0 + gamma / 6.0
        delta4 = delta3 + delta2 / 24.0 + delta / 6.0
        return cls(beta, gamma, delta, beta_dd, gamma_dd, delta_dd,
                   beta2, gamma2, delta2, beta3, gamma3, delta3,
                   beta4, gamma4, delta4)


# ---------------------------------------------------------------------------
# analytic micro-motion of the driven Hubbard chain
#
# Density polynomials are dicts {frozenset((site, spin), ...): coeff};
# multiplication takes set unions, which encodes n^2 = n.


def _pmul(pa, pb):
    out = {}
    for ka, ca in pa.items():
        for kb, cb in pb.items():
            key = ka | kb
            out[key] = out.get(key, 0.0) + ca * cb
    return out


def _dressing(beta, gamma, delta, a_orb, b_orb, const=1.0):
    return {frozenset(): const,
            frozenset({a_orb}): beta,
            frozenset({b_orb}): gamma,
            frozenset({a_orb, b_orb}): delta}


def _attach(tsum, coeff, hop_ops, poly):
    for dens, c in poly.items():
        if c == 0.0:
            continue
        ops = list(hop_ops) + [("n", site, spin)
                               for (site, spin) in sorted(dens)]
        tsum.add(coeff * c, ops)


def _directed_bonds(L):
    """(to, from, sign) with sign = +1 for from=to+1 and -1 for to=from+1."""
    out = []
    for b in range(L - 1):
        out.append((b, b + 1, +1.0))
        out.append((b + 1, b, -1.0))
    return out


def y0_terms(p: HubbardParams):
    """Zeroth hop order: the drive ramp itself divided by omega."""
    t = TermSum()
    for j in range(p.L):
        for s in (0, 1):
            t.add(p.g * (j + 1) / p.omega, [("n", j, s)])
    return t


def y1_terms(p: HubbardParams, c: HopExpansionCoeffs):
    """First hop order: dressed antisymmetric hopping, prefactor J*g/omega^2."""
    t = TermSum()
    pref = p.J * p.g / p.omega ** 2
    for (jto, ifrom, sign) in _directed_bonds(p.L):
        for s in (0, 1):
            sb = 1 - s
            poly = _dressing(c.beta, c.gamma, c.delta, (jto, sb), (ifrom, sb))
            _attach(t, sign * pref,
                    (("cdag", jto, s), ("c", ifrom, s)), poly)
    return t


def y2_terms(p: HubbardParams, c: HopExpansionCoeffs):
    """Second hop order: two-site and interior three-site families."""
    t = TermSum()
    w = p.omega
    a2 = 2.0 * p.J ** 2 * p.g / w ** 3
    a3 = p.J ** 2 * p.g / w ** 3
    bg = c.beta - c.gamma
    bpg = c.beta + c.gamma

    for j in range(p.L - 1):
        jp = j + 1
        # doublon exchange across the bond
        t.add(a2 * bg, [("cdag", j, 0), ("cdag", j, 1),
                        ("c", jp, 0), ("c", jp, 1)])
        t.add(-a2 * bg, [("cdag", jp, 0), ("cdag", jp, 1),
                         ("c", j, 0), ("c", j, 1)])
        # density telescope -n_j + n_{j+1}
        for s in (0, 1):
            t.add(-a2, [("n", j, s)])
            t.add(a2, [("n", jp, s)])
        # (beta+gamma) [ D_{j+1}(1 - n_j) - D_j(1 - n_{j+1}) ]
        dj = frozenset({(j, 0), (j, 1)})
        djp = frozenset({(jp, 0), (jp, 1)})
        poly = {djp: 1.0,
                djp | frozenset({(j, 0)}): -1.0,
                djp | frozenset({(j, 1)}): -1.0,
                dj: -1.0,
                dj | frozenset({(jp, 0)}): 1.0,
                dj | frozenset({(jp, 1)}): 1.0}
        _attach(t, a2 * bpg, (), poly)

    for m in range(1, p.L - 1):
        l, r = m - 1, m + 1
        for s in (0, 1):
            sb = 1 - s
            nm, nl, nr = (m, sb), (l, sb), (r, sb)
            # family 1: l <- r same-spin next-nearest hop
            pa = {frozenset({nm}): bg,
                  frozenset({nl}): -c.beta,
                  frozenset({nr}): c.gamma,
                  frozenset({nm, nl}): -c.delta,
                  frozenset({nm, nr}): c.delta}
            pb = _dressing(c.beta, c.gamma, c.delta, nl, nr)
            _attach(t, a3, (("cdag", l, s), ("c", r, s)), _pmul(pa, pb))
            # family 2: r <- l mirror
            pa = {frozenset({nm}): -bg,
                  frozenset({nl}): -c.gamma,
                  frozenset({nr}): c.beta,
                  frozenset({nm, nl}): -c.delta,
                  frozenset({nm, nr}): c.delta}
            pb = _dressing(c.beta, c.gamma, c.delta, nr, nl)
            _attach(t, a3, (("cdag", r, s), ("c", l, s)), _pmul(pa, pb))
            # families 3-6 carry opposite-spin exchange through the middle
            als, ars = (l, s), (r, sb)
            pa = {frozenset(): bg,
                  frozenset({als}): -c.delta,
                  frozenset({ars}): c.delta}
            pb = _dressing(c.beta, c.gamma, c.delta, als, ars)
            _attach(t, a3,
                    (("cdag", m, s), ("cdag", l, sb), ("c", m, sb), ("c", r, s)),
                    _pmul(pa, pb))
            pa = {frozenset(): -bg,
                  frozenset({als}): -c.delta,
                  frozenset({ars}): c.delta}
            pb = _dressing(c.beta, c.gamma, c.delta, ars, als)
            _attach(t, a3,
                    (("cdag", r, s), ("cdag", m, sb), ("c", l, sb), ("c", m, s)),
                    _pmul(pa, pb))
            pdiff = {frozenset({als}): c.delta, frozenset({ars}): -c.delta}
            pb = {frozenset(): w / (w + p.U),
                  frozenset({als}): -c.beta,
                  frozenset({ars}): -c.beta,
                  frozenset({als, ars}): -c.delta}
            _attach(t, a3,
                    (("cdag", m, s), ("cdag", m, sb), ("c", l, sb), ("c", r, s)),
                    _pmul(pdiff, pb))
            pb = {frozenset(): w / (w - p.U),
                  frozenset({als}): -c.gamma,
                  frozenset({ars}): -c.gamma,
                  frozenset({als, ars}): -c.delta}
            _attach(t, a3,
                    (("cdag", r, s), ("cdag", l, sb), ("c", m, sb), ("c", m, s)),
                    _pmul(pdiff, pb))
    return t


def z1_terms(p: HubbardParams, c: HopExpansionCoeffs):
    """Two-photon component: symmetric dressed hopping, J*g^2/(4 omega^3)."""
    t = TermSum()
    pref = p.J * p.g ** 2 / (4.0 * p.omega ** 3)
    for (jto, ifrom, _sign) in _directed_bonds(p.L):
        for s in (0, 1):
            sb = 1 - s
            poly = _dressing(c.beta2, c.gamma2, c.delta2,
                             (jto, sb), (ifrom, sb))
            _attach(t, pref, (("cdag", jto, s), ("c", ifrom, s)), poly)
    return t


def f31_terms(p: HubbardParams, c: HopExpansionCoeffs):
    """Order-g^3 single-photon component at leading hop order, J*g^3/omega^4."""
    t = TermSum()
    pref = p.J * p.g ** 3 / p.omega ** 4
    for (jto, ifrom, sign) in _directed_bonds(p.L):
        for s in (0, 1):
            sb = 1 - s
            poly = _dressing(c.beta3, c.gamma3, c.delta3,
                             (jto, sb), (ifrom, sb), const=-11.0 / 24.0)
            _attach(t, sign * pref, (("cdag", jto, s), ("c", ifrom, s)), poly)
    return t


def hubbard_micromotion_terms(p: HubbardParams, max_hop_order=2,
                              fswt_order=3):
    """Term lists of the micro-motion components (basis-free).

    Returns {(n, j): TermSum} for the positive harmonics only; negative
    harmonics follow from f(n,-j) = -f(n,j)^dagger.
    """
    if max_hop_order not in (0, 1, 2):
        raise ValueError(f"max_hop_order {max_hop_order} unsupported "
                         "(analytic forms stop at hop order 2)")
    if fswt_order not in (1, 2, 3):
        raise ValueError(f"fswt_order must be 1..3, got {fswt_order}")
    c = HopExpansionCoeffs.from_model(p.U, p.omega)
    if fswt_order >= 3:
        tol = 1e-8 * p.omega
        if abs(3 * p.omega - p.U) < tol:
            raise ResonantDenominator(
                f"omega = U/3 resonance at order 3 (U={p.U}, omega={p.omega})")
    y = y0_terms(p)
    if max_hop_order >= 1:
        y = y + y1_terms(p, c)
    if max_hop_order >= 2:
        y = y + y2_terms(p, c)
    out = {(1, 1): y}
    if fswt_order >= 2:
        out[(2, 2)] = (z1_terms(p, c) if max_hop_order >= 1 else TermSum())
    if fswt_order >= 3:
        out[(3, 1)] = (f31_terms(p, c) if max_hop_order >= 1 else TermSum())
    return out


def hubbard_micromotion(p: HubbardParams, b: SectorBasis, max_hop_order=2,
                        fswt_order=3):
    """Assemble the analytic micro-motion on a sector basis.

    f(1,1) = y0 + y1 + y2 truncated at ``max_hop_order``; f(2,2) is the
    two-photon component; f(3,1) the order-g^3 single-photon component;
    f(2,+-1) and f(3,+-2) vanish identically for this model and are omitted.
    """
    pos = hubbard_micromotion_terms(p, max_hop_order, fswt_order)
    terms = {}
    for (n, j), tsum in pos.items():
        op = tsum.to_operator(b)
        terms[(n, j)] = op
        terms[(n, -j)] = -op.dagger()
    return MicroMotion(terms=terms, omega=p.omega)


def solve_order2(H0: SparseOperator, H_series: HarmonicSeries,
                 f1: MicroMotion, j, tol=None):
    """Order-2 micro-motion at harmonic j by the dense route.

    Builds the source H(2)_j + (1/2) sum_{j' != 0} [f(1)_{j'}, H(1)_{j-j'}]
    + (1/2) [f(1)_j, H(1)_0] and solves against H0 at shift j*omega.
    """
    dim = H0.dim
    source = SparseOperator.zeros(dim, H0.basis)
    if (2, j) in H_series.terms:
        source = source + H_series.terms[(2, j)]
    for (n, jp), f_op in f1.terms.items():
        if n != 1 or jp == 0:
            continue
        h_op = H_series.terms.get((1, j - jp))
        if h_op is not None:
            source = source + 0.5 * commutator(f_op, h_op)
    h0_first = H_series.terms.get((1, 0))
    f_j = f1.terms.get((1, j))
    if h0_first is not None and f_j is not None:
        source = source + 0.5 * commutator(f_j, h0_first)
    if source.nnz == 0:
        return source
    return solve_dense(H0, source, j * H_series.omega, tol)
