//! Composite-space Hamiltonians, frame unitaries and conserved quantities.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_4, SQRT_2};

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};
use crate::hilbert::{
    annihilation, composite_index, eigh_hermitian, parity_sign, qubit, tensor, two_mode_index,
    Operator, Space, C64, EXCITED, GROUND, ZERO,
};

/// Effective qubit frequency, field frequency and coupling.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelParams {
    pub omega0: f64,
    pub omega: f64,
    pub g: f64,
}

impl ModelParams {
    pub fn new(omega0: f64, omega: f64, g: f64) -> Result<Self> {
        if !(omega0.is_finite() && omega.is_finite() && g.is_finite()) {
            return Err(Error::InvalidConfig(
                "model parameters must be finite".into(),
            ));
        }
        if g < 0.0 {
            return Err(Error::InvalidConfig(format!(
                "coupling must be nonnegative, got {g}"
            )));
        }
        Ok(ModelParams { omega0, omega, g })
    }

    /// Same parameters with the qubit frequency negated.
    pub fn with_flipped_omega0(&self) -> Self {
        ModelParams {
            omega0: -self.omega0,
            ..*self
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FrameTag {
    Lab,
    CC,
    FG,
}

/// Sign label of the two Fulton-Gouterman blocks; `Plus` sits on `|e⟩`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    /// Qubit state paired with this block.
    pub fn qubit(self) -> usize {
        match self {
            Sign::Plus => EXCITED,
            Sign::Minus => GROUND,
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Sign::Plus => '+',
            Sign::Minus => '-',
        }
    }
}

fn check_dims(d1: usize, d2: usize) -> Result<()> {
    if d1 < 2 || d2 < 2 {
        return Err(Error::InvalidDimension(format!(
            "mode truncations must be >= 2, got ({d1}, {d2})"
        )));
    }
    Ok(())
}

/// Sparse coordinate list of a matrix; duplicate entries are summed when densified.
#[derive(Clone, Debug, Default)]
pub struct Triplets {
    pub dim: usize,
    pub entries: Vec<(usize, usize, C64)>,
}

impl Triplets {
    pub fn new(dim: usize) -> Self {
        Triplets {
            dim,
            entries: Vec::new(),
        }
    }

    pub fn push(&mut self, row: usize, col: usize, value: C64) {
        if value != ZERO {
            self.entries.push((row, col, value));
        }
    }

    /// Adds `value` at `(row, col)` and its conjugate at `(col, row)`.
    pub fn push_hermitian(&mut self, row: usize, col: usize, value: C64) {
        self.push(row, col, value);
        self.push(col, row, value.conj());
    }

    pub fn to_operator(&self, space: Space) -> Result<Operator> {
        let mut m = Array2::zeros((self.dim, self.dim));
        for &(i, j, v) in &self.entries {
            m[[i, j]] += v;
        }
        Operator::new(m, space)
    }

    /// Dense submatrix on the given indices, in the given order.
    pub fn restrict(&self, indices: &[usize]) -> Array2<C64> {
        let mut pos = vec![usize::MAX; self.dim];
        for (a, &i) in indices.iter().enumerate() {
            pos[i] = a;
        }
        let mut m = Array2::zeros((indices.len(), indices.len()));
        for &(i, j, v) in &self.entries {
            if pos[i] != usize::MAX && pos[j] != usize::MAX {
                m[[pos[i], pos[j]]] += v;
            }
        }
        m
    }

    /// Indices reachable from `start` through nonzero entries.
    pub fn connected_component(&self, start: usize) -> Vec<usize> {
        let mut adj = vec![Vec::new(); self.dim];
        for &(i, j, _) in &self.entries {
            adj[i].push(j);
            adj[j].push(i);
        }
        let mut seen = vec![false; self.dim];
        let mut stack = vec![start];
        seen[start] = true;
        let mut out = Vec::new();
        while let Some(i) = stack.pop() {
            out.push(i);
            for &j in &adj[i] {
                if !seen[j] {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        out.sort_unstable();
        out
    }
}

fn c(v: f64) -> C64 {
    C64::new(v, 0.0)
}

fn free_diagonal(t: &mut Triplets, params: &ModelParams, d1: usize, d2: usize) {
    for n1 in 0..d1 {
        for n2 in 0..d2 {
            let field = params.omega * (n1 + n2) as f64;
            let e = composite_index(d2, n1, n2, EXCITED);
            let g = composite_index(d2, n1, n2, GROUND);
            t.push(e, e, c(field + params.omega0 / 2.0));
            t.push(g, g, c(field - params.omega0 / 2.0));
        }
    }
}

/// Lab-frame Hamiltonian as a sparse coordinate list.
pub fn h_lab_triplets(params: &ModelParams, d1: usize, d2: usize) -> Result<Triplets> {
    check_dims(d1, d2)?;
    let mut t = Triplets::new(2 * d1 * d2);
    free_diagonal(&mut t, params, d1, d2);
    let g = params.g;
    for n1 in 0..d1 {
        for n2 in 0..d2 {
            let from = composite_index(d2, n1, n2, GROUND);
            let mut couple = |m1: usize, m2: usize, amp: f64| {
                t.push_hermitian(composite_index(d2, m1, m2, EXCITED), from, c(g * amp));
            };
            if n1 + 1 < d1 {
                couple(n1 + 1, n2, ((n1 + 1) as f64).sqrt());
            }
            if n1 > 0 {
                couple(n1 - 1, n2, (n1 as f64).sqrt());
            }
            if n2 + 1 < d2 {
                couple(n1, n2 + 1, ((n2 + 1) as f64).sqrt());
            }
            if n2 > 0 {
                couple(n1, n2 - 1, -(n2 as f64).sqrt());
            }
        }
    }
    Ok(t)
}

/// Crossed-coupling (JC on mode 1, anti-JC on mode 2) Hamiltonian as a sparse coordinate list.
pub fn h_cc_triplets(params: &ModelParams, d1: usize, d2: usize) -> Result<Triplets> {
    check_dims(d1, d2)?;
    let mut t = Triplets::new(2 * d1 * d2);
    free_diagonal(&mut t, params, d1, d2);
    let coupling = SQRT_2 * params.g;
    for n1 in 0..d1 {
        for n2 in 0..d2 {
            let from = composite_index(d2, n1, n2, GROUND);
            if n1 + 1 < d1 {
                let to = composite_index(d2, n1 + 1, n2, EXCITED);
                t.push_hermitian(to, from, c(coupling * ((n1 + 1) as f64).sqrt()));
            }
            if n2 > 0 {
                let to = composite_index(d2, n1, n2 - 1, EXCITED);
                t.push_hermitian(to, from, c(-coupling * (n2 as f64).sqrt()));
            }
        }
    }
    Ok(t)
}

pub fn build_h_lab(params: &ModelParams, d1: usize, d2: usize) -> Result<Operator> {
    h_lab_triplets(params, d1, d2)?.to_operator(Space::Composite(d1, d2))
}

pub fn build_h_cc(params: &ModelParams, d1: usize, d2: usize) -> Result<Operator> {
    h_cc_triplets(params, d1, d2)?.to_operator(Space::Composite(d1, d2))
}

/// Mode ladder operators `a₁ = a ⊗ 1`, `a₂ = 1 ⊗ a` on the two-mode space.
pub fn mode_lowering(d1: usize, d2: usize) -> Result<(Operator, Operator)> {
    check_dims(d1, d2)?;
    let a1 = tensor(&[
        &annihilation(d1)?,
        &Operator::identity(Space::Oscillator(d2)),
    ])?;
    let a2 = tensor(&[
        &Operator::identity(Space::Oscillator(d1)),
        &annihilation(d2)?,
    ])?;
    Ok((a1, a2))
}

/// Two-mode parity `e^{iπ(n₁ + n₂)}`.
pub fn two_mode_parity(d1: usize, d2: usize) -> Result<Operator> {
    let mut diag = Vec::with_capacity(d1 * d2);
    for n1 in 0..d1 {
        for n2 in 0..d2 {
            diag.push(parity_sign((n1 + n2) as i64));
        }
    }
    Operator::diagonal(&diag, Space::TwoMode(d1, d2))
}

/// Schwinger two-boson angular momentum.
#[derive(Clone, Debug)]
pub struct Schwinger {
    pub j1: Operator,
    pub j2: Operator,
    pub j3: Operator,
}

pub fn schwinger(d1: usize, d2: usize) -> Result<Schwinger> {
    let (a1, a2) = mode_lowering(d1, d2)?;
    let hop = a1.dagger().dot(&a2)?;
    let hop_back = a1.dot(&a2.dagger())?;
    let n1 = a1.dagger().dot(&a1)?;
    let n2 = a2.dagger().dot(&a2)?;
    Ok(Schwinger {
        j1: 0.5 * &(&hop + &hop_back),
        j2: C64::new(0.0, -0.5) * &(&hop - &hop_back),
        j3: 0.5 * &(&n1 - &n2),
    })
}

/// Embeds a qubit operator as `1_field ⊗ q`.
pub fn embed_qubit(q: &Operator, d1: usize, d2: usize) -> Result<Operator> {
    tensor(&[&Operator::identity(Space::TwoMode(d1, d2)), q])
}

/// `e^{iθ J₂}` on the two-mode space.
///
/// The truncated generator is exact on every block of total excitation below
/// `min(d1, d2)`, so the rotation is exact there too.
pub fn build_rotation_dy(theta: f64, d1: usize, d2: usize) -> Result<Operator> {
    let j2 = schwinger(d1, d2)?.j2;
    let (evals, vecs) = eigh_hermitian(j2.mat())?;
    let phases: Array1<C64> = evals.mapv(|l| C64::from_polar(1.0, theta * l));
    let scaled = &vecs * &phases.view().insert_axis(ndarray::Axis(0));
    let mat = scaled.dot(&vecs.t().mapv(|z| z.conj()));
    Operator::new(mat, Space::TwoMode(d1, d2))
}

/// Which conjugation by `D = e^{iπ/2 J₂}` carries the lab Hamiltonian into the crossed-coupling one.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RotationDirection {
    /// `H_cc = D H_lab D†`.
    Forward,
    /// `H_cc = D† H_lab D`.
    Backward,
}

#[derive(Clone, Copy, Debug)]
pub struct RotationCheck {
    pub forward_residual: f64,
    pub backward_residual: f64,
    pub direction: RotationDirection,
}

/// Composite basis indices with every mode below `d − cut`.
pub fn composite_interior(d1: usize, d2: usize, cut: usize) -> impl Fn(usize) -> bool {
    move |i: usize| {
        let field = i / 2;
        let (n1, n2) = (field / d2, field % d2);
        n1 + cut < d1 && n2 + cut < d2
    }
}

/// Composite basis indices with total excitation `n₁ + n₂ ≤ max_total`.
pub fn total_number_below(d2: usize, max_total: usize) -> impl Fn(usize) -> bool {
    move |i: usize| {
        let field = i / 2;
        field / d2 + field % d2 <= max_total
    }
}

/// Tries both rotation directions against the explicit crossed-coupling matrix.
pub fn check_rotation_direction(params: &ModelParams, d: usize) -> Result<RotationCheck> {
    let h_lab = build_h_lab(params, d, d)?;
    let h_cc = build_h_cc(params, d, d)?;
    let dy = build_rotation_dy(FRAC_PI_2, d, d)?.embed_two_mode()?;
    let keep = total_number_below(d, d.saturating_sub(3));
    let forward_residual = (&h_lab.conjugated_by(&dy)? - &h_cc).max_abs_restricted(&keep);
    let backward_residual = (&h_lab.conjugated_by(&dy.dagger())? - &h_cc).max_abs_restricted(&keep);
    let direction = if forward_residual <= backward_residual {
        RotationDirection::Forward
    } else {
        RotationDirection::Backward
    };
    Ok(RotationCheck {
        forward_residual,
        backward_residual,
        direction,
    })
}

/// Applies a field-dependent 2×2 qubit matrix from the left: for every field
/// index `m`, rows `(m, e)` and `(m, g)` are replaced by `block(m) · rows`.
fn mix_qubit_rows(mat: &mut Array2<C64>, block: impl Fn(usize) -> [[C64; 2]; 2]) {
    let cols = mat.ncols();
    for m in 0..mat.nrows() / 2 {
        let b = block(m);
        let (re, rg) = (2 * m + EXCITED, 2 * m + GROUND);
        for j in 0..cols {
            let (xe, xg) = (mat[[re, j]], mat[[rg, j]]);
            mat[[re, j]] = b[0][0] * xe + b[0][1] * xg;
            mat[[rg, j]] = b[1][0] * xe + b[1][1] * xg;
        }
    }
}

fn field_parities(d1: usize, d2: usize) -> Vec<f64> {
    (0..d1 * d2)
        .map(|m| parity_sign((m / d2 + m % d2) as i64))
        .collect()
}

fn fg_block(parity: f64) -> [[C64; 2]; 2] {
    let r = FRAC_1_SQRT_2;
    [[c(r), c(r * parity)], [c(r), c(-r * parity)]]
}

fn rotation_block() -> [[C64; 2]; 2] {
    let (s, co) = FRAC_PI_4.sin_cos();
    [[c(co), c(s)], [c(-s), c(co)]]
}

/// Fulton-Gouterman unitary `(1/√2)[[1, Π₁₂], [1, −Π₁₂]]` in qubit blocks.
pub fn build_u_fg(d1: usize, d2: usize) -> Result<Operator> {
    check_dims(d1, d2)?;
    let mut m = Array2::eye(2 * d1 * d2);
    let parities = field_parities(d1, d2);
    mix_qubit_rows(&mut m, |f| fg_block(parities[f]));
    Operator::new(m, Space::Composite(d1, d2))
}

/// `e^{iπ/4 σ₂}` on the qubit, identity on the fields.
pub fn build_qubit_rotation(d1: usize, d2: usize) -> Result<Operator> {
    embed_qubit(&qubit::rotation_y(FRAC_PI_4), d1, d2)
}

/// Diagonal of `η_cc = −2J₃ + (σ₃ + 1)/2`.
fn eta_cc_diagonal(d1: usize, d2: usize) -> Vec<f64> {
    let mut diag = vec![0.0; 2 * d1 * d2];
    for n1 in 0..d1 {
        for n2 in 0..d2 {
            let field = n2 as f64 - n1 as f64;
            diag[composite_index(d2, n1, n2, EXCITED)] = field + 1.0;
            diag[composite_index(d2, n1, n2, GROUND)] = field;
        }
    }
    diag
}

/// Lab to Fulton-Gouterman map `U_FG e^{iπ/4 σ₂} e^{iω₀ η_cc t} e^{iπ/2 J₂}`.
pub fn build_t(params: &ModelParams, t: f64, d1: usize, d2: usize) -> Result<Operator> {
    check_dims(d1, d2)?;
    let dy = build_rotation_dy(FRAC_PI_2, d1, d2)?.embed_two_mode()?;
    let mut m = dy.into_mat();
    let eta = eta_cc_diagonal(d1, d2);
    for (i, mut row) in m.rows_mut().into_iter().enumerate() {
        let phase = C64::from_polar(1.0, params.omega0 * eta[i] * t);
        row.mapv_inplace(|z| z * phase);
    }
    mix_qubit_rows(&mut m, |_| rotation_block());
    let parities = field_parities(d1, d2);
    mix_qubit_rows(&mut m, |f| fg_block(parities[f]));
    Operator::new(m, Space::Composite(d1, d2))
}

/// The two auxiliary pure-field Hamiltonians on the two-mode space.
pub fn h_pm_triplets(sign: Sign, params: &ModelParams, d1: usize, d2: usize) -> Result<Triplets> {
    check_dims(d1, d2)?;
    let s = sign.value();
    let mut t = Triplets::new(d1 * d2);
    for n1 in 0..d1 {
        for n2 in 0..d2 {
            let from = two_mode_index(d2, n1, n2);
            let diag = (params.omega - params.omega0) * n1 as f64
                + (params.omega + params.omega0) * n2 as f64;
            t.push(from, from, c(diag));
            let parity = parity_sign((n1 + n2) as i64);
            // Mode j = 1 carries (−1)^j = −1, mode j = 2 carries +1.
            for (mode_sign, target, occupation) in [
                (
                    -1.0,
                    (n1 + 1 < d1).then(|| two_mode_index(d2, n1 + 1, n2)),
                    n1,
                ),
                (
                    1.0,
                    (n2 + 1 < d2).then(|| two_mode_index(d2, n1, n2 + 1)),
                    n2,
                ),
            ] {
                if let Some(to) = target {
                    let amp = -(mode_sign / SQRT_2)
                        * params.g
                        * ((occupation + 1) as f64).sqrt()
                        * (1.0 - s * mode_sign * parity);
                    t.push_hermitian(to, from, c(amp));
                }
            }
        }
    }
    Ok(t)
}

pub fn build_h_pm(sign: Sign, params: &ModelParams, d1: usize, d2: usize) -> Result<Operator> {
    h_pm_triplets(sign, params, d1, d2)?.to_operator(Space::TwoMode(d1, d2))
}

/// Conserved operator of a frame. The Fulton-Gouterman frame has one per block.
#[derive(Clone, Debug)]
pub enum Eta {
    Single(Operator),
    Pair { plus: Operator, minus: Operator },
}

impl Eta {
    pub fn single(self) -> Option<Operator> {
        match self {
            Eta::Single(op) => Some(op),
            Eta::Pair { .. } => None,
        }
    }

    pub fn pair(self) -> Option<(Operator, Operator)> {
        match self {
            Eta::Pair { plus, minus } => Some((plus, minus)),
            Eta::Single(_) => None,
        }
    }
}

/// Eigenvalue of `η_±` on `|n₁, n₂⟩`.
pub fn eta_pm_value(sign: Sign, n1: usize, n2: usize) -> f64 {
    let parity = parity_sign((n1 + n2) as i64);
    n2 as f64 - n1 as f64 + (1.0 - sign.value() * parity) / 2.0
}

/// `η_± = −2J₃ + (1 ∓ Π₁₂)/2` on the two-mode space.
pub fn build_eta_pm(sign: Sign, d1: usize, d2: usize) -> Result<Operator> {
    check_dims(d1, d2)?;
    let mut diag = Vec::with_capacity(d1 * d2);
    for n1 in 0..d1 {
        for n2 in 0..d2 {
            diag.push(eta_pm_value(sign, n1, n2));
        }
    }
    Operator::diagonal(&diag, Space::TwoMode(d1, d2))
}

pub fn build_eta(frame: FrameTag, d1: usize, d2: usize) -> Result<Eta> {
    check_dims(d1, d2)?;
    let space = Space::Composite(d1, d2);
    match frame {
        FrameTag::CC => Ok(Eta::Single(Operator::diagonal(
            &eta_cc_diagonal(d1, d2),
            space,
        )?)),
        FrameTag::Lab => {
            let j1 = schwinger(d1, d2)?.j1.embed_two_mode()?;
            let inversion = embed_qubit(&qubit::projector(EXCITED), d1, d2)?;
            Ok(Eta::Single(&(-2.0 * &j1) + &inversion))
        }
        FrameTag::FG => Ok(Eta::Pair {
            plus: build_eta_pm(Sign::Plus, d1, d2)?,
            minus: build_eta_pm(Sign::Minus, d1, d2)?,
        }),
    }
}

/// `η_FG = η₊ ⊗ |e⟩⟨e| + η₋ ⊗ |g⟩⟨g|` on the composite space.
pub fn build_eta_fg_composite(d1: usize, d2: usize) -> Result<Operator> {
    let plus = tensor(&[
        &build_eta_pm(Sign::Plus, d1, d2)?,
        &qubit::projector(EXCITED),
    ])?;
    let minus = tensor(&[
        &build_eta_pm(Sign::Minus, d1, d2)?,
        &qubit::projector(GROUND),
    ])?;
    Ok(&plus + &minus)
}

/// Time-independent Fulton-Gouterman generator `U_FG R (H_cc − ω₀ η_cc) R† U_FG†`.
///
/// The `−ω₀ η_cc` piece comes from the time-dependent phase in `T`; it
/// vanishes for `ω₀ = 0`.
pub fn fg_generator(params: &ModelParams, d1: usize, d2: usize) -> Result<Operator> {
    let h_cc = build_h_cc(params, d1, d2)?;
    let eta = eta_cc_diagonal(d1, d2);
    let mut k = h_cc.into_mat();
    for (i, e) in eta.iter().enumerate() {
        k[[i, i]] -= c(params.omega0 * e);
    }
    let parities = field_parities(d1, d2);
    let left = |m: &mut Array2<C64>| {
        mix_qubit_rows(m, |_| rotation_block());
        mix_qubit_rows(m, |f| fg_block(parities[f]));
    };
    left(&mut k);
    let mut kt = k.t().mapv(|z| z.conj());
    left(&mut kt);
    Operator::new(kt, Space::Composite(d1, d2))
}

/// The `(q, q')` qubit block of a composite operator as a two-mode operator.
pub fn qubit_block(op: &Operator, row_qubit: usize, col_qubit: usize) -> Result<Operator> {
    let (d1, d2) = match op.space() {
        Space::Composite(d1, d2) => (d1, d2),
        other => {
            return Err(Error::InvalidDimension(format!(
                "expected a composite operator, got {other:?}"
            )))
        }
    };
    let n = d1 * d2;
    let m = Array2::from_shape_fn((n, n), |(i, j)| {
        op.get(2 * i + row_qubit, 2 * j + col_qubit)
    });
    Operator::new(m, Space::TwoMode(d1, d2))
}

/// Largest entry of the `e–g` and `g–e` qubit blocks.
pub fn off_diagonal_block_norm(op: &Operator) -> Result<f64> {
    Ok(qubit_block(op, EXCITED, GROUND)?
        .max_abs()
        .max(qubit_block(op, GROUND, EXCITED)?.max_abs()))
}

/// The block the Fulton-Gouterman generator carries on `sign.qubit()`, written
/// with the auxiliary Hamiltonians: `H_±` at `−ω₀`, shifted by `−ω₀/2`.
pub fn expected_fg_block(
    sign: Sign,
    params: &ModelParams,
    d1: usize,
    d2: usize,
) -> Result<Operator> {
    let h = build_h_pm(sign, &params.with_flipped_omega0(), d1, d2)?;
    Ok(&h - &((params.omega0 / 2.0) * &Operator::identity(h.space())))
}

/// `σ₃` on the composite space.
pub fn composite_sigma_z(d1: usize, d2: usize) -> Result<Operator> {
    embed_qubit(&qubit::sigma_z(), d1, d2)
}

/// `−σ₃ Π₁₂`, the Fulton-Gouterman image of the lab population inversion.
pub fn expected_fg_inversion(d1: usize, d2: usize) -> Result<Operator> {
    let p = tensor(&[&two_mode_parity(d1, d2)?, &qubit::sigma_z()])?;
    Ok(-1.0 * &p)
}

/// Dense Kronecker-product construction of the lab Hamiltonian, for cross-checks.
pub fn build_h_lab_dense(params: &ModelParams, d1: usize, d2: usize) -> Result<Operator> {
    let (a1, a2) = mode_lowering(d1, d2)?;
    let id_q = Operator::identity(Space::Qubit);
    let id_f = Operator::identity(Space::TwoMode(d1, d2));
    let n_tot = &a1.dagger().dot(&a1)? + &a2.dagger().dot(&a2)?;
    let x = &(&(&a1.dagger() + &a1) + &a2.dagger()) - &a2;
    let coupling = tensor(&[&x, &qubit::sigma_plus()])?;
    let h = &(&tensor(&[&id_f, &qubit::sigma_z()])?
        .mat()
        .mapv(|z| z * params.omega0 / 2.0)
        + tensor(&[&n_tot, &id_q])?.mat().mapv(|z| z * params.omega))
        + (&coupling + &coupling.dagger())
            .mat()
            .mapv(|z| z * params.g);
    Operator::new(h, Space::Composite(d1, d2))
}

/// Dense construction of the auxiliary Hamiltonians from `a_j` and `Π₁₂`, for cross-checks.
pub fn build_h_pm_dense(
    sign: Sign,
    params: &ModelParams,
    d1: usize,
    d2: usize,
) -> Result<Operator> {
    let (a1, a2) = mode_lowering(d1, d2)?;
    let parity = two_mode_parity(d1, d2)?;
    let id = Operator::identity(Space::TwoMode(d1, d2));
    let mut h = Operator::zeros(Space::TwoMode(d1, d2));
    for (mode_sign, a) in [(-1.0, &a1), (1.0, &a2)] {
        let number = a.dagger().dot(a)?;
        h = &h + &((params.omega + mode_sign * params.omega0) * &number);
        let x = &id + &((sign.value() * mode_sign) * &parity);
        let hop = &a.dot(&x)? + &x.dot(&a.dagger())?;
        h = &h - &((mode_sign / SQRT_2 * params.g) * &hop);
    }
    Ok(h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::StateVector;

    fn params() -> ModelParams {
        ModelParams::new(0.35, 1.0, 0.3).unwrap()
    }

    #[test]
    fn lab_matrix_elements() {
        let p = params();
        let h = build_h_lab(&p, 4, 4).unwrap();
        let ix = |n1, n2, q| composite_index(4, n1, n2, q);
        assert!((h.get(ix(1, 0, EXCITED), ix(0, 0, GROUND)).re - p.g).abs() < 1e-15);
        assert!((h.get(ix(0, 0, EXCITED), ix(0, 1, GROUND)).re + p.g).abs() < 1e-15);
        assert!((h.get(ix(0, 0, EXCITED), ix(0, 0, EXCITED)).re - p.omega0 / 2.0).abs() < 1e-15);
        assert!(h.hermiticity_residual() < 1e-14);
    }

    #[test]
    fn sparse_and_dense_lab_builders_agree() {
        let p = params();
        let sparse = build_h_lab(&p, 5, 4).unwrap();
        let dense = build_h_lab_dense(&p, 5, 4).unwrap();
        assert!(sparse.max_abs_diff(&dense) < 1e-15);
    }

    #[test]
    fn cc_matrix_elements() {
        let p = params();
        let h = build_h_cc(&p, 4, 4).unwrap();
        let ix = |n1, n2, q| composite_index(4, n1, n2, q);
        assert!((h.get(ix(1, 0, EXCITED), ix(0, 0, GROUND)).re - SQRT_2 * p.g).abs() < 1e-15);
        assert!((h.get(ix(0, 0, EXCITED), ix(0, 1, GROUND)).re + SQRT_2 * p.g).abs() < 1e-15);
        assert!((h.get(ix(0, 1, GROUND), ix(0, 0, EXCITED)).re + SQRT_2 * p.g).abs() < 1e-15);
        assert_eq!(h.get(ix(0, 0, GROUND), ix(0, 1, EXCITED)), ZERO);
        assert!(h.hermiticity_residual() < 1e-14);
    }

    #[test]
    fn rotation_basics() {
        let id = build_rotation_dy(0.0, 5, 5).unwrap();
        assert!(id.max_abs_diff(&Operator::identity(Space::TwoMode(5, 5))) < 1e-12);
        let theta = 0.7;
        let d = 8;
        let dy = build_rotation_dy(theta, d, d).unwrap();
        assert!(dy.unitarity_residual() < 1e-12);
        let (a1, a2) = mode_lowering(d, d).unwrap();
        let rotated = a1.conjugated_by(&dy).unwrap();
        let (s, co) = (theta / 2.0).sin_cos();
        let expected = &(co * &a1) - &(s * &a2);
        let keep = |i: usize| i / d + i % d <= d - 2;
        assert!((&rotated - &expected).max_abs_restricted(keep) < 1e-10);
    }

    #[test]
    fn rotation_direction_is_forward() {
        let check = check_rotation_direction(&params(), 8).unwrap();
        assert_eq!(check.direction, RotationDirection::Forward);
        assert!(check.forward_residual < 1e-12);
        assert!(check.backward_residual > 1e-3);
    }

    #[test]
    fn fulton_gouterman_unitary() {
        let u = build_u_fg(4, 4).unwrap();
        assert!(u.unitarity_residual() < 1e-14);
        let r = FRAC_1_SQRT_2;
        let mut amps = Array1::zeros(32);
        amps[composite_index(4, 0, 0, EXCITED)] = c(r);
        amps[composite_index(4, 0, 0, GROUND)] = c(r);
        let psi = StateVector::new(amps, Space::Composite(4, 4)).unwrap();
        let out = u.apply(&psi).unwrap();
        let target = StateVector::composite_fock(0, 0, EXCITED, 4, 4).unwrap();
        assert!(out.max_abs_diff(&target) < 1e-15);
    }

    #[test]
    fn full_transform_properties() {
        let p0 = ModelParams::new(0.0, 1.0, 0.3).unwrap();
        let t0 = build_t(&p0, 0.0, 6, 6).unwrap();
        let t1 = build_t(&p0, 3.7, 6, 6).unwrap();
        assert_eq!(t0.max_abs_diff(&t1), 0.0);
        assert!(t0.unitarity_residual() < 1e-12);
        let vac = StateVector::composite_fock(0, 0, GROUND, 6, 6).unwrap();
        let out = t0.apply(&vac).unwrap();
        let target = StateVector::composite_fock(0, 0, EXCITED, 6, 6).unwrap();
        assert!(out.max_abs_diff(&target) < 1e-12);
        assert!(build_t(&params(), 1.3, 6, 6).unwrap().unitarity_residual() < 1e-12);
    }

    #[test]
    fn auxiliary_hamiltonian_elements() {
        let p = params();
        let h = build_h_pm(Sign::Plus, &p, 5, 5).unwrap();
        let ix = |n1, n2| two_mode_index(5, n1, n2);
        assert!((h.get(ix(1, 0), ix(0, 0)).re - SQRT_2 * p.g).abs() < 1e-15);
        assert_eq!(h.get(ix(0, 1), ix(0, 0)), ZERO);
        for (m, n) in [(0, 0), (2, 1), (3, 4)] {
            let want = (p.omega - p.omega0) * m as f64 + (p.omega + p.omega0) * n as f64;
            assert!((h.get(ix(m, n), ix(m, n)).re - want).abs() < 1e-14);
        }
        for sign in [Sign::Plus, Sign::Minus] {
            let dense = build_h_pm_dense(sign, &p, 5, 5).unwrap();
            assert!(build_h_pm(sign, &p, 5, 5).unwrap().max_abs_diff(&dense) < 1e-15);
        }
    }

    #[test]
    fn eta_commutators() {
        let p = params();
        let d = 8;
        let interior = composite_interior(d, d, 1);
        let lab = build_eta(FrameTag::Lab, d, d).unwrap().single().unwrap();
        let h_lab = build_h_lab(&p, d, d).unwrap();
        assert!(
            lab.commutator(&h_lab)
                .unwrap()
                .max_abs_restricted(&interior)
                < 1e-12
        );
        let cc = build_eta(FrameTag::CC, d, d).unwrap().single().unwrap();
        assert!(
            cc.commutator(&build_h_cc(&p, d, d).unwrap())
                .unwrap()
                .max_abs()
                < 1e-12
        );
        let (plus, minus) = build_eta(FrameTag::FG, d, d).unwrap().pair().unwrap();
        assert!(
            plus.commutator(&build_h_pm(Sign::Plus, &p, d, d).unwrap())
                .unwrap()
                .max_abs()
                < 1e-12
        );
        assert!(
            minus
                .commutator(&build_h_pm(Sign::Minus, &p, d, d).unwrap())
                .unwrap()
                .max_abs()
                < 1e-12
        );
    }

    #[test]
    fn fg_generator_is_block_diagonal() {
        let p = params();
        let k = fg_generator(&p, 6, 6).unwrap();
        assert!(off_diagonal_block_norm(&k).unwrap() < 1e-12);
        for sign in [Sign::Plus, Sign::Minus] {
            let block = qubit_block(&k, sign.qubit(), sign.qubit()).unwrap();
            let want = expected_fg_block(sign, &p, 6, 6).unwrap();
            assert!(block.max_abs_diff(&want) < 1e-12, "{sign:?}");
        }
    }

    #[test]
    fn lab_inversion_maps_to_parity() {
        let p = ModelParams::new(0.0, 1.0, 0.3).unwrap();
        let t = build_t(&p, 0.0, 6, 6).unwrap();
        let mapped = composite_sigma_z(6, 6).unwrap().conjugated_by(&t).unwrap();
        assert!(mapped.max_abs_diff(&expected_fg_inversion(6, 6).unwrap()) < 1e-12);
    }

    #[test]
    fn triplet_component_and_restriction() {
        let p = ModelParams::new(0.0, 1.0, 0.1).unwrap();
        let t = h_cc_triplets(&p, 6, 6).unwrap();
        let start = composite_index(6, 0, 0, GROUND);
        let sector = t.connected_component(start);
        assert!(sector.contains(&composite_index(6, 1, 0, EXCITED)));
        assert!(sector.contains(&composite_index(6, 1, 1, GROUND)));
        assert!(!sector.contains(&composite_index(6, 0, 0, EXCITED)));
        let m = t.restrict(&sector);
        let dense = build_h_cc(&p, 6, 6).unwrap().restrict(&sector);
        assert!((&m - dense.mat()).iter().all(|z| z.norm() < 1e-15));
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(ModelParams::new(f64::NAN, 1.0, 0.1).is_err());
        assert!(ModelParams::new(0.0, 1.0, -0.1).is_err());
        assert!(build_h_lab(&params(), 1, 4).is_err());
    }
}
