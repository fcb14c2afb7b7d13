//! Parity sectors of the auxiliary field Hamiltonians and their para-Bose form.

use std::fmt;
use std::str::FromStr;

use ndarray::Array2;

use crate::algebra::{ladder_ops, ParaboseOrder};
use crate::error::{Error, Result};
use crate::frames::{eta_pm_value, h_pm_triplets, ModelParams, Sign};
use crate::hilbert::{
    composite_index, parity_sign, two_mode_index, Operator, Space, StateVector, C64, ONE,
};

/// `h(k) = (2k − 1 + (−1)^k)/4`, which is `⌊k/2⌋`.
pub fn h(k: usize) -> usize {
    let k = k as i64;
    let numerator = 2 * k - 1 + parity_sign(k) as i64;
    (numerator / 4) as usize
}

/// A para-Bose sector `H_{±,j}`.
///
/// The deformation index of the sector Hamiltonian is `j` itself; the bases are
/// organised in pairs `j = 2M, 2M + 1` with `M = ⌊j/2⌋`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SubspaceLabel {
    pub sign: Sign,
    pub j: usize,
}

impl SubspaceLabel {
    pub fn new(sign: Sign, j: usize) -> Self {
        SubspaceLabel { sign, j }
    }

    pub fn plus(j: usize) -> Self {
        Self::new(Sign::Plus, j)
    }

    pub fn minus(j: usize) -> Self {
        Self::new(Sign::Minus, j)
    }

    /// Para-Bose order of the sector Hamiltonian, `p = 2(j + 1)`.
    pub fn order(&self) -> ParaboseOrder {
        ParaboseOrder::new(self.j)
    }

    /// `M = ⌊j/2⌋`, the index of the `2M / 2M + 1` pair the sector belongs to.
    pub fn pair_index(&self) -> usize {
        self.j / 2
    }

    pub fn is_even(&self) -> bool {
        self.j % 2 == 0
    }

    /// Tabulated `⟨η_±⟩` of the sector: `−2M` for `(+, 2M)` and `(−, 2M+1)`,
    /// `2(M+1)` for `(+, 2M+1)` and `(−, 2M)`.
    pub fn tabulated_eta(&self) -> f64 {
        let m = self.pair_index() as f64;
        match (self.sign, self.is_even()) {
            (Sign::Plus, true) | (Sign::Minus, false) => -2.0 * m,
            (Sign::Plus, false) | (Sign::Minus, true) => 2.0 * (m + 1.0),
        }
    }

    /// Tabulated `J₁` eigenvalue of the lab-frame image of `|±, j; k⟩`.
    pub fn tabulated_j1(&self, k: usize) -> f64 {
        let j = self.j as f64;
        let odd_k = 1.0 - parity_sign(k as i64);
        match self.sign {
            Sign::Plus => parity_sign(self.j as i64) / 4.0 * (2.0 * j + odd_k),
            Sign::Minus => {
                parity_sign(self.j as i64 + 1) / 4.0
                    * (2.0 * (j + parity_sign(self.j as i64)) + odd_k)
            }
        }
    }
}

impl fmt::Display for SubspaceLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{}", self.sign.symbol(), self.j)
    }
}

impl FromStr for SubspaceLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (sign, j) = s
            .trim()
            .split_once(',')
            .ok_or_else(|| Error::Parse(format!("expected `sign,j`, got `{s}`")))?;
        let sign = match sign.trim() {
            "+" => Sign::Plus,
            "-" => Sign::Minus,
            other => return Err(Error::Parse(format!("bad sector sign `{other}`"))),
        };
        let j = j
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad sector index `{j}`")))?;
        Ok(SubspaceLabel { sign, j })
    }
}

fn plus_pair(j: usize, k: usize) -> (usize, usize) {
    let m = j / 2;
    if j % 2 == 0 {
        (h(k + 4 * m + 1), h(k))
    } else {
        (h(k), h(k + 4 * m + 3))
    }
}

/// Two-mode Fock state `|m₁, m₂⟩` of the k-th para-Bose level of a sector.
///
/// Minus sectors use the mode-exchanged plus assignment, which is the one the
/// minus auxiliary Hamiltonian leaves invariant.
pub fn basis_state(label: SubspaceLabel, k: usize) -> (usize, usize) {
    let (m1, m2) = plus_pair(label.j, k);
    match label.sign {
        Sign::Plus => (m1, m2),
        Sign::Minus => (m2, m1),
    }
}

/// Alternative minus-sector assignment: the plus assignment with the even and
/// odd sectors interchanged. It is not invariant under the minus Hamiltonian.
pub fn basis_state_interchanged(label: SubspaceLabel, k: usize) -> (usize, usize) {
    match label.sign {
        Sign::Plus => plus_pair(label.j, k),
        Sign::Minus => {
            let m = label.j / 2;
            if label.is_even() {
                (h(k), h(k + 4 * m + 3))
            } else {
                (h(k + 4 * m + 1), h(k))
            }
        }
    }
}

/// Sector basis listing.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BasisMap {
    pub label: SubspaceLabel,
    pub kmax: usize,
    pub pairs: Vec<(usize, (usize, usize))>,
}

impl BasisMap {
    pub fn new(label: SubspaceLabel, kmax: usize) -> Self {
        let pairs = (0..=kmax).map(|k| (k, basis_state(label, k))).collect();
        BasisMap { label, kmax, pairs }
    }

    /// Largest mode occupation used by the map.
    pub fn max_occupation(&self) -> usize {
        self.pairs
            .iter()
            .map(|&(_, (a, b))| a.max(b))
            .max()
            .unwrap_or(0)
    }

    pub fn two_mode_indices(&self, d2: usize) -> Vec<usize> {
        self.pairs
            .iter()
            .map(|&(_, (m1, m2))| two_mode_index(d2, m1, m2))
            .collect()
    }
}

impl fmt::Display for BasisMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "# sector={}", self.label)?;
        writeln!(f, "k,m1,m2")?;
        for (k, (m1, m2)) in &self.pairs {
            writeln!(f, "{k},{m1},{m2}")?;
        }
        Ok(())
    }
}

impl FromStr for BasisMap {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut lines = s.lines();
        let label = lines
            .next()
            .and_then(|l| l.strip_prefix("# sector="))
            .ok_or_else(|| Error::Parse("missing `# sector=` line".into()))?
            .parse()?;
        if lines.next().map(str::trim) != Some("k,m1,m2") {
            return Err(Error::Parse("missing `k,m1,m2` header".into()));
        }
        let mut pairs = Vec::new();
        for line in lines.filter(|l| !l.trim().is_empty()) {
            let fields: Vec<usize> = line
                .split(',')
                .map(|x| {
                    x.trim()
                        .parse()
                        .map_err(|_| Error::Parse(format!("bad basis row `{line}`")))
                })
                .collect::<Result<_>>()?;
            match fields[..] {
                [k, m1, m2] => pairs.push((k, (m1, m2))),
                _ => return Err(Error::Parse(format!("bad basis row `{line}`"))),
            }
        }
        let kmax = pairs.last().map(|p| p.0).unwrap_or(0);
        Ok(BasisMap { label, kmax, pairs })
    }
}

fn check_fits(label: SubspaceLabel, kmax: usize, d1: usize, d2: usize) -> Result<()> {
    for k in 0..=kmax + 1 {
        let (m1, m2) = basis_state(label, k);
        if m1 >= d1 || m2 >= d2 {
            return Err(Error::InvalidDimension(format!(
                "sector {label} level {k} needs |{m1},{m2}⟩ but dims are ({d1}, {d2})"
            )));
        }
    }
    Ok(())
}

/// `⟨basis(k')|H_±|basis(k)⟩` for `k, k' ≤ kmax`.
pub fn project_h(
    label: SubspaceLabel,
    params: &ModelParams,
    kmax: usize,
    d1: usize,
    d2: usize,
) -> Result<Operator> {
    check_fits(label, kmax, d1, d2)?;
    let triplets = h_pm_triplets(label.sign, params, d1, d2)?;
    let indices = BasisMap::new(label, kmax).two_mode_indices(d2);
    Operator::new(triplets.restrict(&indices), Space::Oscillator(kmax + 1))
}

/// Largest element of `H_±` connecting the first `kmax + 1` sector states to
/// anything outside the first `kmax + 2`.
pub fn sector_leakage(
    label: SubspaceLabel,
    params: &ModelParams,
    kmax: usize,
    d1: usize,
    d2: usize,
) -> Result<f64> {
    check_fits(label, kmax, d1, d2)?;
    let triplets = h_pm_triplets(label.sign, params, d1, d2)?;
    let inside = BasisMap::new(label, kmax).two_mode_indices(d2);
    let mut span = inside.clone();
    span.push(two_mode_index(
        d2,
        basis_state(label, kmax + 1).0,
        basis_state(label, kmax + 1).1,
    ));
    let mut worst: f64 = 0.0;
    for &(row, col, v) in &triplets.entries {
        if inside.contains(&col) && !span.contains(&row) {
            worst = worst.max(v.norm());
        }
    }
    Ok(worst)
}

/// Largest `|⟨basis_b(k')|H_±|basis_a(k)⟩|` between two sectors of the same sign.
pub fn cross_sector_element(
    a: SubspaceLabel,
    b: SubspaceLabel,
    params: &ModelParams,
    kmax: usize,
    d1: usize,
    d2: usize,
) -> Result<f64> {
    if a.sign != b.sign {
        return Err(Error::InvalidConfig(
            "cross-sector check needs sectors of the same sign".into(),
        ));
    }
    check_fits(a, kmax, d1, d2)?;
    check_fits(b, kmax, d1, d2)?;
    let h = h_pm_triplets(a.sign, params, d1, d2)?.to_operator(Space::TwoMode(d1, d2))?;
    let ia = BasisMap::new(a, kmax).two_mode_indices(d2);
    let ib = BasisMap::new(b, kmax).two_mode_indices(d2);
    let mut worst: f64 = 0.0;
    for &r in &ib {
        for &c in &ia {
            worst = worst.max(h.get(r, c).norm());
        }
    }
    Ok(worst)
}

/// Sign conventions for the `ω₀` terms of the sector Hamiltonian.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Convention {
    /// `ω(n+N) ∓ (ω₀/2)(−1)^{n+N} ± g(A+A†) + λ_±` with
    /// `λ₊ = ω₀(N+½)(−1)^N` and `λ₋ = [ω − ω₀(N+½)](−1)^N − ω₀`.
    AsWritten,
    /// Parity term `±(ω₀/2)(−1)^{n+N}` and constant `∓ω₀(N+½)(−1)^N`, as
    /// obtained by projecting the auxiliary Hamiltonians.
    Projected,
}

impl fmt::Display for Convention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Convention::AsWritten => "as_written",
            Convention::Projected => "projected",
        })
    }
}

/// Coefficient multiplying `(ω₀/2)(−1)^{n+N}`.
pub fn parity_term_sign(sign: Sign, convention: Convention) -> f64 {
    match convention {
        Convention::AsWritten => -sign.value(),
        Convention::Projected => sign.value(),
    }
}

/// Constant shift `λ_{±,N}`.
pub fn lambda(sign: Sign, n: usize, params: &ModelParams, convention: Convention) -> f64 {
    let phase = parity_sign(n as i64);
    let half = n as f64 + 0.5;
    match (convention, sign) {
        (Convention::AsWritten, Sign::Plus) => params.omega0 * half * phase,
        (Convention::AsWritten, Sign::Minus) => {
            (params.omega - params.omega0 * half) * phase - params.omega0
        }
        (Convention::Projected, _) => -sign.value() * params.omega0 * half * phase,
    }
}

/// Driven para-Bose oscillator `ω(n+N) + c(ω₀/2)(−1)^{n+N} ± g(A+A†) + λ` on levels `0..=kmax`.
pub fn driven_oscillator_h(
    sign: Sign,
    n: usize,
    params: &ModelParams,
    kmax: usize,
    convention: Convention,
) -> Result<Operator> {
    let ops = ladder_ops(n, kmax + 1)?;
    let s = sign.value();
    let lam = lambda(sign, n, params, convention);
    let parity_coeff = parity_term_sign(sign, convention) * params.omega0 / 2.0;
    let diag: Vec<f64> = (0..=kmax)
        .map(|k| params.omega * (k + n) as f64 + parity_coeff * parity_sign((k + n) as i64) + lam)
        .collect();
    let base = Operator::diagonal(&diag, ops.lower.space())?;
    Ok(&base + &((s * params.g) * &ops.quadrature()))
}

/// `(ω/2){A ± c, A† ± c} + F_{±,N}(n)` with `c = g/ω`.
pub fn displaced_form(
    sign: Sign,
    n: usize,
    params: &ModelParams,
    kmax: usize,
    convention: Convention,
) -> Result<Operator> {
    if params.omega == 0.0 {
        return Err(Error::InvalidConfig(
            "displaced form needs a nonzero field frequency".into(),
        ));
    }
    let ops = ladder_ops(n, kmax + 1)?;
    let space = ops.lower.space();
    let shift = (sign.value() * params.g / params.omega) * &Operator::identity(space);
    let lower = &ops.lower + &shift;
    let raise = &ops.raise + &shift;
    let kinetic = (params.omega / 2.0) * &lower.anticommutator(&raise)?;
    let lam = lambda(sign, n, params, convention);
    let parity_coeff = parity_term_sign(sign, convention) * params.omega0 / 2.0;
    let g_over_w = params.g / params.omega;
    let f: Vec<f64> = (0..=kmax)
        .map(|k| {
            lam - params.omega * (1.0 + g_over_w * g_over_w)
                + parity_coeff * parity_sign((k + n) as i64)
        })
        .collect();
    Ok(&kinetic + &Operator::diagonal(&f, space)?)
}

/// Outcome of comparing the direct projection with the closed-form conventions.
#[derive(Clone, Copy, Debug)]
pub struct ReconcileReport {
    pub label: SubspaceLabel,
    pub as_written_residual: f64,
    /// Printed form with only the parity-term sign flipped.
    pub parity_flipped_residual: f64,
    pub projected_residual: f64,
    pub chosen: Convention,
}

impl ReconcileReport {
    pub fn chosen_residual(&self) -> f64 {
        match self.chosen {
            Convention::AsWritten => self.as_written_residual,
            Convention::Projected => self.projected_residual,
        }
    }
}

/// Decides which convention the direct projection supports, preferring the printed one.
pub fn reconcile(
    label: SubspaceLabel,
    params: &ModelParams,
    kmax: usize,
    d1: usize,
    d2: usize,
) -> Result<ReconcileReport> {
    let projected = project_h(label, params, kmax, d1, d2)?;
    let n = label.order().index();
    let as_written = driven_oscillator_h(label.sign, n, params, kmax, Convention::AsWritten)?;
    let reconciled = driven_oscillator_h(label.sign, n, params, kmax, Convention::Projected)?;
    let flip = params.omega0 * label.sign.value() * parity_sign(n as i64);
    let flipped_diag: Vec<f64> = (0..=kmax).map(|k| flip * parity_sign(k as i64)).collect();
    let parity_flipped = &as_written + &Operator::diagonal(&flipped_diag, as_written.space())?;

    let as_written_residual = projected.max_abs_diff(&as_written);
    let projected_residual = projected.max_abs_diff(&reconciled);
    let chosen = if as_written_residual < 1e-12 {
        Convention::AsWritten
    } else {
        Convention::Projected
    };
    Ok(ReconcileReport {
        label,
        as_written_residual,
        parity_flipped_residual: projected.max_abs_diff(&parity_flipped),
        projected_residual,
        chosen,
    })
}

/// `⟨basis(k)|η_±|basis(k)⟩`.
pub fn eta_expectation(label: SubspaceLabel, k: usize, d1: usize, d2: usize) -> Result<f64> {
    let (m1, m2) = basis_state(label, k);
    if m1 >= d1 || m2 >= d2 {
        return Err(Error::InvalidDimension(format!(
            "|{m1},{m2}⟩ outside dims ({d1}, {d2})"
        )));
    }
    Ok(eta_pm_value(label.sign, m1, m2))
}

/// `|±, j; k⟩ ⊗ |e/g⟩` as a Fulton-Gouterman-frame composite state.
pub fn fg_basis_vector(
    label: SubspaceLabel,
    k: usize,
    d1: usize,
    d2: usize,
) -> Result<StateVector> {
    let (m1, m2) = basis_state(label, k);
    StateVector::composite_fock(m1, m2, label.sign.qubit(), d1, d2)
}

/// Places oscillator amplitudes `φ_k` on the sector basis, paired with the sector's qubit state.
pub fn embed_sector_state(
    label: SubspaceLabel,
    amps: &[C64],
    d1: usize,
    d2: usize,
) -> Result<StateVector> {
    let mut out = ndarray::Array1::zeros(2 * d1 * d2);
    for (k, &a) in amps.iter().enumerate() {
        let (m1, m2) = basis_state(label, k);
        if m1 >= d1 || m2 >= d2 {
            if a.norm() > 0.0 {
                return Err(Error::InvalidDimension(format!(
                    "sector {label} level {k} (|{m1},{m2}⟩) outside dims ({d1}, {d2})"
                )));
            }
            continue;
        }
        out[composite_index(d2, m1, m2, label.sign.qubit())] = a;
    }
    StateVector::new(out, Space::Composite(d1, d2))
}

/// `J₁` eigen-relation of the lab-frame image `T†|±, j; k⟩|e/g⟩`.
#[derive(Clone, Copy, Debug)]
pub struct J1Check {
    pub measured: f64,
    /// `max |J₁v − ⟨J₁⟩v|`: zero when `v` is an eigenvector at all.
    pub eigen_residual: f64,
    pub tabulated: f64,
    /// `max |J₁v − λ_tab v|`.
    pub tabulated_residual: f64,
}

/// `transform` is the lab to Fulton-Gouterman unitary and `j1` the embedded `J₁`.
pub fn j1_check(
    label: SubspaceLabel,
    k: usize,
    transform: &Operator,
    j1: &Operator,
) -> Result<J1Check> {
    let (d1, d2) = match transform.space() {
        Space::Composite(d1, d2) => (d1, d2),
        other => {
            return Err(Error::InvalidDimension(format!(
                "expected a composite transform, got {other:?}"
            )))
        }
    };
    let v = transform
        .dagger()
        .apply(&fg_basis_vector(label, k, d1, d2)?)?;
    let jv = j1.apply(&v)?;
    let measured = v.inner(&jv)?.re;
    let residual = |lam: f64| {
        jv.amps()
            .iter()
            .zip(v.amps().iter())
            .fold(0.0_f64, |m, (a, b)| m.max((a - b * lam).norm()))
    };
    let tabulated = label.tabulated_j1(k);
    Ok(J1Check {
        measured,
        eigen_residual: residual(measured),
        tabulated,
        tabulated_residual: residual(tabulated),
    })
}

/// Amplitude vector of a para-Bose Fock state `|k⟩` of length `len`.
pub fn fock_amplitudes(k: usize, len: usize) -> Vec<C64> {
    let mut v = vec![C64::new(0.0, 0.0); len];
    if k < len {
        v[k] = ONE;
    }
    v
}

/// Tridiagonal check used in tests: all entries beyond the first off-diagonal.
pub fn beyond_tridiagonal(op: &Operator) -> f64 {
    let m: &Array2<C64> = op.mat();
    let mut worst: f64 = 0.0;
    for ((i, j), z) in m.indexed_iter() {
        if i.abs_diff(j) > 1 {
            worst = worst.max(z.norm());
        }
    }
    worst
}
