//! Para-Bose coherent states, their lab-frame images and phase-space grids.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, PI, SQRT_2};
use std::fmt;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use ndarray::{Array1, Array2};
use rayon::prelude::*;

use crate::algebra::ladder_ops;
use crate::dynamics::{evolve_series, leakage, make_propagator, TimeSeries};
use crate::error::{Error, Result};
use crate::frames::{build_rotation_dy, build_t, h_cc_triplets, ModelParams};
use crate::hilbert::{
    composite_index, parity_sign, DensityMatrix, Operator, Space, StateVector, C64, EXCITED,
    GROUND, ZERO,
};
use crate::partition::{embed_sector_state, SubspaceLabel};
use crate::specfun::{hyp1f1, hyp2f2_1132, log_factorial};

/// Leakage gate applied to every numerically generated state.
pub const LEAKAGE_GATE: f64 = 1e-10;

/// Para-Bose order index `N` and scaled time `gt`; the coherent parameter is `β = −i·gt`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CoherentParams {
    pub n: usize,
    pub gt: f64,
}

impl CoherentParams {
    pub fn new(n: usize, gt: f64) -> Result<Self> {
        if !gt.is_finite() || gt < 0.0 {
            return Err(Error::InvalidConfig(format!(
                "gt must be finite and >= 0, got {gt}"
            )));
        }
        Ok(CoherentParams { n, gt })
    }

    /// Smallest truncation accepted by [`gp_coherent_numeric`].
    pub fn min_dim(&self) -> usize {
        (4.0 * (2.0 * self.gt * self.gt + 1.0)).ceil() as usize
    }
}

/// `e^{−i gt (A† + A)} |0⟩`, by exact spectral evolution.
pub fn gp_coherent_numeric(params: CoherentParams, dim: usize) -> Result<StateVector> {
    if dim < params.min_dim() {
        return Err(Error::InvalidDimension(format!(
            "coherent state at gt = {} needs dim >= {}, got {dim}",
            params.gt,
            params.min_dim()
        )));
    }
    let ops = ladder_ops(params.n, dim)?;
    let prop = make_propagator(&ops.quadrature())?;
    let vacuum = StateVector::basis(0, Space::Oscillator(dim))?;
    let psi = prop.evolve(&vacuum, params.gt)?;
    let leak = leakage(&psi, (dim / 8).max(1))?;
    if leak > LEAKAGE_GATE {
        return Err(Error::Truncation(format!(
            "coherent state leakage {leak:e} at dim {dim}"
        )));
    }
    Ok(psi)
}

/// `j!/(2j)! (√2 x)^{2j}` and `j!√(j+1)/(2j+1)! (√2 x)^{2j+1}`, evaluated in log space.
fn coefficient(k: usize, x: f64) -> f64 {
    if x == 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    let j = k / 2;
    let mut log = log_factorial(j as u64) - log_factorial(k as u64) + k as f64 * (SQRT_2 * x).ln();
    if k % 2 == 1 {
        log += 0.5 * ((j + 1) as f64).ln();
    }
    log.exp()
}

/// Closed-form `N = 0` coherent amplitudes on levels `0..=2·jmax+1` at scaled time `x`.
fn closed_amplitudes(x: f64, jmax: usize) -> Result<Array1<C64>> {
    let z = -0.5 * x * x;
    let mut amps = Array1::zeros(2 * jmax + 2);
    for j in 0..=jmax {
        let jf = j as f64;
        let (even, odd) = (2 * j, 2 * j + 1);
        let c_even = coefficient(even, x);
        if c_even != 0.0 {
            amps[even] = C64::new(c_even * hyp1f1(jf + 1.0, jf + 0.5, z)?.value, 0.0);
        }
        let c_odd = coefficient(odd, x);
        if c_odd != 0.0 {
            amps[odd] = C64::new(0.0, -c_odd * hyp1f1(jf + 2.0, jf + 1.5, z)?.value);
        }
    }
    Ok(amps)
}

/// The `N = 0` coherent state from its hypergeometric expansion, as printed.
pub fn gp_coherent_closed(gt: f64, jmax: usize) -> Result<StateVector> {
    gp_coherent_closed_with(ClosedForm::AsWritten, gt, jmax)
}

/// Candidate readings of a closed form, tried in this order during reconciliation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ClosedForm {
    AsWritten,
    /// Scaled time replaced by `c·gt`.
    TimeRescaled(f64),
    /// Overall prefactor doubled; only meaningful for the mean number.
    PrefactorDoubled,
}

impl ClosedForm {
    pub const RESCALINGS: [f64; 3] = [SQRT_2, 2.0, FRAC_1_SQRT_2];

    pub fn candidates() -> Vec<ClosedForm> {
        let mut out = vec![ClosedForm::AsWritten];
        out.extend(
            Self::RESCALINGS
                .iter()
                .map(|&c| ClosedForm::TimeRescaled(c)),
        );
        out.push(ClosedForm::PrefactorDoubled);
        out
    }

    fn time_scale(self) -> f64 {
        match self {
            ClosedForm::TimeRescaled(c) => c,
            _ => 1.0,
        }
    }
}

impl fmt::Display for ClosedForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ClosedForm::AsWritten => f.write_str("as_written"),
            ClosedForm::TimeRescaled(c) => write!(f, "time_rescaled({c})"),
            ClosedForm::PrefactorDoubled => f.write_str("prefactor_doubled"),
        }
    }
}

pub fn gp_coherent_closed_with(form: ClosedForm, gt: f64, jmax: usize) -> Result<StateVector> {
    if !gt.is_finite() || gt < 0.0 {
        return Err(Error::InvalidConfig(format!(
            "gt must be finite and >= 0, got {gt}"
        )));
    }
    if (jmax as f64) < 2.0 * gt * gt + 10.0 {
        return Err(Error::InvalidDimension(format!(
            "jmax {jmax} below 2gt² + 10 at gt = {gt}"
        )));
    }
    let mut amps = closed_amplitudes(form.time_scale() * gt, jmax)?;
    if form == ClosedForm::PrefactorDoubled {
        amps.mapv_inplace(|z| 2.0 * z);
    }
    let dim = amps.len();
    StateVector::new(amps, Space::Oscillator(dim))
}

/// `⟨n⟩` of the `N = 0` coherent state from the printed `₂F₂` expression.
pub fn mean_n_closed(gt: f64) -> Result<f64> {
    mean_n_closed_with(ClosedForm::AsWritten, gt)
}

pub fn mean_n_closed_with(form: ClosedForm, gt: f64) -> Result<f64> {
    if !gt.is_finite() || !(0.0..=10.0).contains(&gt) {
        return Err(Error::Domain(format!(
            "mean number closed form needs 0 <= gt <= 10, got {gt}"
        )));
    }
    let x = form.time_scale() * gt;
    let prefactor = if form == ClosedForm::PrefactorDoubled {
        2.0
    } else {
        1.0
    };
    let x2 = x * x;
    Ok(prefactor * 0.5 * x2 * (1.0 + hyp2f2_1132(-2.0 * x2)?.value))
}

/// Worst-case error of each candidate reading against a numeric oracle.
#[derive(Clone, Debug)]
pub struct Reconciliation {
    pub residuals: Vec<(ClosedForm, f64)>,
    pub chosen: ClosedForm,
    pub tolerance: f64,
}

impl Reconciliation {
    pub fn chosen_residual(&self) -> f64 {
        self.residuals
            .iter()
            .find(|(f, _)| *f == self.chosen)
            .map_or(f64::INFINITY, |(_, r)| *r)
    }
}

impl fmt::Display for Reconciliation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (form, r) in &self.residuals {
            writeln!(f, "candidate.{form}={r:e}")?;
        }
        writeln!(f, "chosen={}", self.chosen)?;
        write!(f, "tolerance={:e}", self.tolerance)
    }
}

fn choose(residuals: Vec<(ClosedForm, f64)>, tolerance: f64, what: &str) -> Result<Reconciliation> {
    match residuals.iter().find(|(_, r)| *r < tolerance) {
        Some(&(chosen, _)) => Ok(Reconciliation {
            residuals,
            chosen,
            tolerance,
        }),
        None => Err(Error::Reconciliation(format!(
            "no reading of the {what} closed form reaches {tolerance:e}: {residuals:?}"
        ))),
    }
}

/// Numeric `⟨n⟩` of the `N = 0` coherent state at each scaled time.
pub fn mean_n_numeric(gts: &[f64], dim: usize) -> Result<Vec<f64>> {
    let gt_max = gts.iter().copied().fold(0.0, f64::max);
    let dim = dim.max(CoherentParams::new(0, gt_max)?.min_dim());
    let ops = ladder_ops(0, dim)?;
    let prop = make_propagator(&ops.quadrature())?;
    let vacuum = StateVector::basis(0, Space::Oscillator(dim))?;
    let mut observables = vec![("n".to_string(), ops.number.clone())];
    observables.extend(crate::dynamics::leakage_observables(
        Space::Oscillator(dim),
        dim / 8,
    )?);
    let series = evolve_series(&prop, &vacuum, gts, &observables)?;
    crate::dynamics::leakage_gate(&series, LEAKAGE_GATE)?;
    Ok(series.column("n")?.to_vec())
}

/// Tries every [`ClosedForm`] for `⟨n⟩` against numeric evolution, by maximum relative error.
pub fn reconcile_mean_n(gts: &[f64], numeric: &[f64], tolerance: f64) -> Result<Reconciliation> {
    if gts.len() != numeric.len() {
        return Err(Error::DimensionMismatch {
            expected: gts.len(),
            found: numeric.len(),
        });
    }
    let mut residuals = Vec::new();
    for form in ClosedForm::candidates() {
        let mut worst: f64 = 0.0;
        for (&gt, &num) in gts.iter().zip(numeric) {
            let closed = mean_n_closed_with(form, gt)?;
            worst = worst.max((closed - num).abs() / num.abs().max(f64::MIN_POSITIVE));
        }
        residuals.push((form, worst));
    }
    choose(residuals, tolerance, "mean number")
}

/// Tries the amplitude expansion readings against numeric evolution, by maximum amplitude error.
pub fn reconcile_amplitudes(gts: &[f64], tolerance: f64) -> Result<Reconciliation> {
    let mut residuals = Vec::new();
    for form in ClosedForm::candidates()
        .into_iter()
        .filter(|f| *f != ClosedForm::PrefactorDoubled)
    {
        let mut worst: f64 = 0.0;
        for &gt in gts {
            worst = worst.max(amplitude_error(form, gt)?);
        }
        residuals.push((form, worst));
    }
    choose(residuals, tolerance, "coherent amplitude")
}

/// `max_k |closed_k − numeric_k|` at one scaled time.
pub fn amplitude_error(form: ClosedForm, gt: f64) -> Result<f64> {
    let params = CoherentParams::new(0, gt)?;
    let jmax = (2.0 * gt * gt + 10.0).ceil() as usize;
    let dim = params.min_dim().max(2 * jmax + 2).max(64);
    let numeric = gp_coherent_numeric(params, dim)?;
    let closed = gp_coherent_closed_with(form, gt, jmax)?;
    let len = numeric.dim().max(closed.dim());
    let at = |v: &StateVector, k: usize| v.amps().get(k).copied().unwrap_or(ZERO);
    Ok((0..len).fold(0.0, |m, k| m.max((at(&numeric, k) - at(&closed, k)).norm())))
}

/// Even and odd level populations of an oscillator state.
pub fn parity_populations(psi: &StateVector) -> (f64, f64) {
    psi.amps()
        .iter()
        .enumerate()
        .fold((0.0, 0.0), |(e, o), (k, z)| {
            if k % 2 == 0 {
                (e + z.norm_sqr(), o)
            } else {
                (e, o + z.norm_sqr())
            }
        })
}

/// Crossed-coupling image of the `N = 0` coherent state: even `k = 2j` on
/// `|j, j, g⟩`, odd `k = 2j+1` on `|j+1, j, e⟩`. Levels beyond the truncation
/// are dropped if their total weight stays under the leakage gate.
pub fn cc_entangled_state(osc: &StateVector, d1: usize, d2: usize) -> Result<StateVector> {
    let mut out = Array1::zeros(2 * d1 * d2);
    let mut dropped = 0.0;
    for (k, &a) in osc.amps().iter().enumerate() {
        let j = k / 2;
        let (m1, qubit) = if k % 2 == 0 {
            (j, GROUND)
        } else {
            (j + 1, EXCITED)
        };
        if m1 >= d1 || j >= d2 {
            dropped += a.norm_sqr();
            continue;
        }
        out[composite_index(d2, m1, j, qubit)] = a;
    }
    if dropped > LEAKAGE_GATE {
        return Err(Error::Truncation(format!(
            "population {dropped:e} does not fit dims ({d1}, {d2})"
        )));
    }
    StateVector::new(out, Space::Composite(d1, d2))
}

/// Applies a two-mode operator to both qubit components of a composite state.
fn apply_two_mode(op: &Operator, psi: &StateVector) -> Result<StateVector> {
    let (d1, d2) = match psi.space() {
        Space::Composite(d1, d2) => (d1, d2),
        other => {
            return Err(Error::InvalidDimension(format!(
                "expected a composite state, got {other:?}"
            )))
        }
    };
    if op.dim() != d1 * d2 {
        return Err(Error::DimensionMismatch {
            expected: d1 * d2,
            found: op.dim(),
        });
    }
    let m = psi
        .amps()
        .view()
        .into_shape((d1 * d2, 2))
        .map_err(|e| Error::Linalg(e.to_string()))?;
    let out = op.mat().dot(&m);
    StateVector::new(Array1::from_iter(out.iter().copied()), psi.space())
}

/// Lab-frame state from the closed-form amplitudes.
pub fn lab_entangled_state(gt: f64, jmax: usize, d1: usize, d2: usize) -> Result<StateVector> {
    let osc = gp_coherent_closed(gt, jmax)?;
    cc_to_lab(&cc_entangled_state(&osc, d1, d2)?)
}

/// `D† ψ_cc` with `D = e^{iπ/2 J₂}`.
pub fn cc_to_lab(psi_cc: &StateVector) -> Result<StateVector> {
    let (d1, d2) = match psi_cc.space() {
        Space::Composite(d1, d2) => (d1, d2),
        other => {
            return Err(Error::InvalidDimension(format!(
                "expected a composite state, got {other:?}"
            )))
        }
    };
    apply_two_mode(&build_rotation_dy(-FRAC_PI_2, d1, d2)?, psi_cc)
}

/// `T† (φ ⊗ |e/g⟩)`: an oscillator-frame sector state carried to the lab frame.
pub fn transport_to_lab(
    label: SubspaceLabel,
    osc: &StateVector,
    params: &ModelParams,
    t: f64,
    d1: usize,
    d2: usize,
) -> Result<StateVector> {
    let fg = embed_sector_state(
        label,
        osc.amps().as_slice().unwrap_or(&osc.amps().to_vec()),
        d1,
        d2,
    )?;
    build_t(params, t, d1, d2)?.dagger().apply(&fg)
}

/// Adds `sigma_z_lab = −parity` to a series holding a `parity` column.
pub fn sigma_z_lab_from_parity(series: &TimeSeries) -> Result<TimeSeries> {
    let values: Vec<f64> = series.column("parity")?.iter().map(|p| -p).collect();
    let mut out = series.clone();
    out.push_column("sigma_z_lab", values)?;
    Ok(out)
}

/// Mode truncation for a pumped run up to `gt_max`.
pub fn pumping_dim(gt_max: f64) -> usize {
    let grown = (4.0 * (SQRT_2 * gt_max).powi(2)).ceil() as usize;
    grown.max(32)
}

/// `⟨σz⟩` of `|0,0,g⟩` under the crossed-coupling Hamiltonian, evolved inside the
/// chain of states it couples to. Columns: `sigma_z_lab` and per-mode leakage.
pub fn chain_inversion_series(
    params: &ModelParams,
    d: usize,
    times: &[f64],
    guard: usize,
) -> Result<TimeSeries> {
    let triplets = h_cc_triplets(params, d, d)?;
    let start = composite_index(d, 0, 0, GROUND);
    let chain = triplets.connected_component(start);
    let h = Operator::new(triplets.restrict(&chain), Space::Generic(chain.len()))?;
    let prop = make_propagator(&h)?;
    let space = Space::Generic(chain.len());
    let mut sz = Vec::with_capacity(chain.len());
    let mut top1 = Vec::with_capacity(chain.len());
    let mut top2 = Vec::with_capacity(chain.len());
    for &i in &chain {
        let (field, qubit) = (i / 2, i % 2);
        let (n1, n2) = (field / d, field % d);
        sz.push(if qubit == EXCITED { 1.0 } else { -1.0 });
        top1.push(if n1 + guard >= d { 1.0 } else { 0.0 });
        top2.push(if n2 + guard >= d { 1.0 } else { 0.0 });
    }
    let position = chain
        .iter()
        .position(|&i| i == start)
        .ok_or_else(|| Error::Linalg("start state missing".into()))?;
    let psi0 = StateVector::basis(position, space)?;
    let observables = vec![
        ("sigma_z_lab".to_string(), Operator::diagonal(&sz, space)?),
        ("leak_mode1".to_string(), Operator::diagonal(&top1, space)?),
        ("leak_mode2".to_string(), Operator::diagonal(&top2, space)?),
    ];
    evolve_series(&prop, &psi0, times, &observables)
}

/// Husimi `Q(α) = ⟨α|ρ|α⟩/π` on a square grid of `Re α, Im α ∈ [−range, range]`.
#[derive(Clone, Debug, PartialEq)]
pub struct QGrid {
    range: f64,
    points: usize,
    /// `values[[row, col]]`: row indexes `Im α`, column indexes `Re α`.
    values: Array2<f64>,
}

impl QGrid {
    pub fn new(range: f64, points: usize, values: Array2<f64>) -> Result<Self> {
        if !(range > 0.0) || !range.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "range must be positive, got {range}"
            )));
        }
        if points < 3 || points % 2 == 0 {
            return Err(Error::InvalidConfig(format!(
                "points must be odd and >= 3, got {points}"
            )));
        }
        if values.dim() != (points, points) {
            return Err(Error::DimensionMismatch {
                expected: points * points,
                found: values.len(),
            });
        }
        if values.iter().any(|&q| !q.is_finite() || q < -1e-14) {
            return Err(Error::InvalidConfig(
                "Q values must be finite and nonnegative".into(),
            ));
        }
        Ok(QGrid {
            range,
            points,
            values,
        })
    }

    pub fn range(&self) -> f64 {
        self.range
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn step(&self) -> f64 {
        2.0 * self.range / (self.points - 1) as f64
    }

    pub fn coordinate(&self, i: usize) -> f64 {
        if i + 1 == self.points {
            self.range
        } else {
            -self.range + i as f64 * self.step()
        }
    }

    /// Cell-area weighted sum.
    pub fn integral(&self) -> f64 {
        self.values.sum() * self.step() * self.step()
    }

    /// Mean `(Re α, Im α)` of the normalized distribution.
    pub fn mean(&self) -> (f64, f64) {
        let total = self.values.sum();
        let (mut x, mut y) = (0.0, 0.0);
        for ((r, c), &q) in self.values.indexed_iter() {
            x += q * self.coordinate(c);
            y += q * self.coordinate(r);
        }
        (x / total, y / total)
    }

    /// `[[var x, cov], [cov, var y]]` of the normalized distribution.
    pub fn covariance(&self) -> [[f64; 2]; 2] {
        let total = self.values.sum();
        let (mx, my) = self.mean();
        let (mut xx, mut xy, mut yy) = (0.0, 0.0, 0.0);
        for ((r, c), &q) in self.values.indexed_iter() {
            let (dx, dy) = (self.coordinate(c) - mx, self.coordinate(r) - my);
            xx += q * dx * dx;
            xy += q * dx * dy;
            yy += q * dy * dy;
        }
        [[xx / total, xy / total], [xy / total, yy / total]]
    }

    /// Ratio of the larger to the smaller covariance eigenvalue.
    pub fn anisotropy(&self) -> f64 {
        let [[a, b], [_, d]] = self.covariance();
        let mid = 0.5 * (a + d);
        let half_gap = (0.25 * (a - d) * (a - d) + b * b).sqrt();
        (mid + half_gap) / (mid - half_gap)
    }

    /// Grid point `(Re α, Im α)` of the largest value.
    pub fn peak(&self) -> (f64, f64) {
        let ((r, c), _) =
            self.values
                .indexed_iter()
                .fold(((0, 0), f64::NEG_INFINITY), |best, (idx, &q)| {
                    if q > best.1 {
                        (idx, q)
                    } else {
                        best
                    }
                });
        (self.coordinate(c), self.coordinate(r))
    }

    pub fn write_csv<W: Write>(&self, mut writer: W) -> Result<()> {
        writeln!(writer, "# range={}", self.range)?;
        writeln!(writer, "# points={}", self.points)?;
        let mut w = csv::WriterBuilder::new()
            .has_headers(false)
            .from_writer(writer);
        for row in self.values.rows() {
            w.write_record(row.iter().map(|q| format!("{q:?}")))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut buffered = BufReader::new(reader);
        let mut meta = String::new();
        for _ in 0..2 {
            let mut line = String::new();
            buffered.read_line(&mut line)?;
            meta.push_str(line.trim_start_matches('#'));
        }
        let map = crate::algebra::parse_key_values(&meta)?;
        let get = |key: &str| {
            map.get(key)
                .ok_or_else(|| Error::Parse(format!("missing `{key}` in grid preamble")))
        };
        let range: f64 = get("range")?
            .parse()
            .map_err(|_| Error::Parse("bad range".into()))?;
        let points: usize = get("points")?
            .parse()
            .map_err(|_| Error::Parse("bad points".into()))?;
        let mut r = csv::ReaderBuilder::new()
            .has_headers(false)
            .from_reader(buffered);
        let mut values = Vec::with_capacity(points * points);
        for record in r.records() {
            for field in record?.iter() {
                values.push(
                    field
                        .trim()
                        .parse::<f64>()
                        .map_err(|_| Error::Parse(format!("bad number `{field}`")))?,
                );
            }
        }
        if values.len() != points * points {
            return Err(Error::DimensionMismatch {
                expected: points * points,
                found: values.len(),
            });
        }
        let values = Array2::from_shape_vec((points, points), values)
            .map_err(|e| Error::Parse(e.to_string()))?;
        QGrid::new(range, points, values)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::read_csv(std::fs::File::open(path)?)
    }
}

/// Untruncated coherent amplitudes `e^{−|α|²/2} αⁿ/√n!` for `n < dim`.
fn coherent_amplitudes(alpha: C64, dim: usize) -> Vec<C64> {
    let mut amps = Vec::with_capacity(dim);
    let mut term = C64::new((-alpha.norm_sqr() / 2.0).exp(), 0.0);
    for n in 0..dim {
        if n > 0 {
            term = term * alpha / (n as f64).sqrt();
        }
        amps.push(term);
    }
    amps
}

pub fn husimi_q(rho: &DensityMatrix, range: f64, points: usize) -> Result<QGrid> {
    if points < 3 || points % 2 == 0 {
        return Err(Error::InvalidConfig(format!(
            "points must be odd and >= 3, got {points}"
        )));
    }
    if !(range > 0.0) || !range.is_finite() {
        return Err(Error::InvalidConfig(format!(
            "range must be positive, got {range}"
        )));
    }
    let dim = rho.dim();
    let step = 2.0 * range / (points - 1) as f64;
    let coord = |i: usize| {
        if i + 1 == points {
            range
        } else {
            -range + i as f64 * step
        }
    };
    let rows: Vec<Vec<f64>> = (0..points)
        .into_par_iter()
        .map(|r| {
            (0..points)
                .map(|c| {
                    let v = coherent_amplitudes(C64::new(coord(c), coord(r)), dim);
                    let mut acc = ZERO;
                    for (a, va) in v.iter().enumerate() {
                        let mut row = ZERO;
                        for (b, vb) in v.iter().enumerate() {
                            row += rho.mat()[[a, b]] * vb;
                        }
                        acc += va.conj() * row;
                    }
                    (acc.re / PI).max(0.0)
                })
                .collect()
        })
        .collect();
    let values = Array2::from_shape_vec((points, points), rows.into_iter().flatten().collect())
        .map_err(|e| Error::Linalg(e.to_string()))?;
    QGrid::new(range, points, values)
}

/// Reduced lab-frame state of mode 1 for the `N = 0` coherent state at `gt`.
pub fn lab_reduced_first_mode(gt: f64, d: usize) -> Result<DensityMatrix> {
    let params = CoherentParams::new(0, gt)?;
    let osc_dim = params.min_dim().max(2 * d);
    let osc = gp_coherent_numeric(params, osc_dim)?;
    let lab = cc_to_lab(&cc_entangled_state(&osc, d, d)?)?;
    crate::hilbert::reduced_first_mode(&lab, (d, d, 2))
}

/// `(−1)^k` expectation of an oscillator state.
pub fn parity_expectation(psi: &StateVector) -> f64 {
    psi.amps()
        .iter()
        .enumerate()
        .map(|(k, z)| parity_sign(k as i64) * z.norm_sqr())
        .sum()
}
