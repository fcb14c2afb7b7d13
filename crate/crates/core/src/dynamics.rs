//! Exact spectral time evolution and sampled observables.

use std::io::{Read, Write};
use std::path::Path;

use ndarray::{Array1, Array2, Axis};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hilbert::{eigh_hermitian, Operator, Space, StateVector, C64, ZERO};

/// Spectral components below this magnitude are dropped from the evolution.
pub const COMPONENT_CUTOFF: f64 = 1e-15;
/// Largest imaginary part tolerated in a Hermitian expectation value.
pub const IMAG_TOLERANCE: f64 = 1e-8;

/// `H = V diag(λ) V†`, evaluated as `e^{−iHt} = V e^{−iλt} V†`.
#[derive(Clone, Debug)]
pub struct Propagator {
    eigenvalues: Array1<f64>,
    eigenvectors: Array2<C64>,
    space: Space,
}

pub fn make_propagator(h: &Operator) -> Result<Propagator> {
    let residual = h.hermiticity_residual();
    if residual > 1e-10 {
        return Err(Error::NotHermitian(residual));
    }
    let (eigenvalues, eigenvectors) = eigh_hermitian(h.mat())?;
    Ok(Propagator {
        eigenvalues,
        eigenvectors,
        space: h.space(),
    })
}

impl Propagator {
    pub fn eigenvalues(&self) -> &Array1<f64> {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &Array2<C64> {
        &self.eigenvectors
    }

    pub fn source_dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn space(&self) -> Space {
        self.space
    }

    /// `max |V V† − 1|`.
    pub fn unitarity_error(&self) -> f64 {
        Operator::from_parts(self.eigenvectors.clone(), Space::Generic(self.source_dim()))
            .unitarity_residual()
    }

    /// `max |V diag(λ) V† − H|`.
    pub fn reconstruction_error(&self, h: &Operator) -> f64 {
        let lambda = self.eigenvalues.mapv(|l| C64::new(l, 0.0));
        let scaled = &self.eigenvectors * &lambda.view().insert_axis(Axis(0));
        let back = scaled.dot(&self.eigenvectors.t().mapv(|z| z.conj()));
        back.iter()
            .zip(h.mat().iter())
            .fold(0.0, |m, (a, b)| m.max((a - b).norm()))
    }

    fn check_dim(&self, found: usize) -> Result<()> {
        if found != self.source_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.source_dim(),
                found,
            });
        }
        Ok(())
    }

    /// `V† ψ`.
    pub fn components(&self, psi: &StateVector) -> Result<Array1<C64>> {
        self.check_dim(psi.dim())?;
        Ok(self.eigenvectors.t().mapv(|z| z.conj()).dot(psi.amps()))
    }

    /// `e^{−iHt} ψ`.
    pub fn evolve(&self, psi: &StateVector, t: f64) -> Result<StateVector> {
        let c = self.components(psi)?;
        let phased: Array1<C64> = c
            .iter()
            .zip(self.eigenvalues.iter())
            .map(|(&ci, &l)| ci * C64::from_polar(1.0, -l * t))
            .collect();
        StateVector::new(self.eigenvectors.dot(&phased), psi.space())
    }
}

pub fn evolve(prop: &Propagator, psi: &StateVector, t: f64) -> Result<StateVector> {
    prop.evolve(psi, t)
}

/// Observables projected onto the eigenvectors an initial state actually populates.
struct ReducedEvolution {
    energies: Vec<f64>,
    coeffs: Vec<C64>,
    observables: Vec<Array2<C64>>,
}

fn diagonal_of(op: &Operator) -> Option<Vec<f64>> {
    let m = op.mat();
    let n = m.nrows();
    for ((i, j), z) in m.indexed_iter() {
        if i != j && *z != ZERO {
            return None;
        }
    }
    let d: Vec<C64> = (0..n).map(|i| m[[i, i]]).collect();
    if d.iter().any(|z| z.im != 0.0) {
        return None;
    }
    Some(d.iter().map(|z| z.re).collect())
}

impl ReducedEvolution {
    fn new(
        prop: &Propagator,
        psi0: &StateVector,
        observables: &[(String, Operator)],
    ) -> Result<Self> {
        let c = prop.components(psi0)?;
        let kept: Vec<usize> = (0..c.len())
            .filter(|&m| c[m].norm() > COMPONENT_CUTOFF)
            .collect();
        let v = prop.eigenvectors.select(Axis(1), &kept);
        let v_dag = v.t().mapv(|z| z.conj());
        let mut projected = Vec::with_capacity(observables.len());
        for (name, op) in observables {
            prop.check_dim(op.dim()).map_err(|_| {
                Error::InvalidConfig(format!("observable `{name}` has dimension {}", op.dim()))
            })?;
            let ov = match diagonal_of(op) {
                Some(diag) => {
                    let d = Array1::from(diag).mapv(|x| C64::new(x, 0.0));
                    &v * &d.view().insert_axis(Axis(1))
                }
                None => op.mat().dot(&v),
            };
            projected.push(v_dag.dot(&ov));
        }
        Ok(ReducedEvolution {
            energies: kept.iter().map(|&m| prop.eigenvalues[m]).collect(),
            coeffs: kept.iter().map(|&m| c[m]).collect(),
            observables: projected,
        })
    }

    fn sample(&self, t: f64) -> Vec<C64> {
        let amps: Array1<C64> = self
            .coeffs
            .iter()
            .zip(&self.energies)
            .map(|(&c, &e)| c * C64::from_polar(1.0, -e * t))
            .collect();
        let conj = amps.mapv(|z| z.conj());
        self.observables
            .iter()
            .map(|o| conj.dot(&o.dot(&amps)))
            .collect()
    }
}

/// Sampled real expectation values versus time.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeSeries {
    times: Vec<f64>,
    columns: Vec<(String, Vec<f64>)>,
}

impl TimeSeries {
    /// Times must be finite and strictly increasing.
    pub fn new(times: Vec<f64>) -> Result<Self> {
        if times.iter().any(|t| !t.is_finite()) || times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidConfig(
                "time samples must be finite and strictly increasing".into(),
            ));
        }
        Ok(TimeSeries {
            times,
            columns: Vec::new(),
        })
    }

    /// `samples` evenly spaced points on `[0, tmax]`.
    pub fn uniform(tmax: f64, samples: usize) -> Result<Vec<f64>> {
        if samples < 2 || !(tmax > 0.0) || !tmax.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "need samples >= 2 and tmax > 0, got {samples}, {tmax}"
            )));
        }
        let step = tmax / (samples - 1) as f64;
        Ok((0..samples)
            .map(|i| {
                if i + 1 == samples {
                    tmax
                } else {
                    i as f64 * step
                }
            })
            .collect())
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.columns.iter().map(|(n, _)| n.as_str())
    }

    pub fn push_column(&mut self, name: &str, values: Vec<f64>) -> Result<()> {
        if values.len() != self.times.len() {
            return Err(Error::DimensionMismatch {
                expected: self.times.len(),
                found: values.len(),
            });
        }
        if self.columns.iter().any(|(n, _)| n == name) {
            return Err(Error::InvalidConfig(format!("duplicate column `{name}`")));
        }
        self.columns.push((name.to_string(), values));
        Ok(())
    }

    pub fn column(&self, name: &str) -> Result<&[f64]> {
        self.columns
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v.as_slice())
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    }

    /// Largest `|a − b|` over all samples of a shared column.
    pub fn max_abs_diff(&self, other: &TimeSeries, name: &str) -> Result<f64> {
        let (a, b) = (self.column(name)?, other.column(name)?);
        if a.len() != b.len() {
            return Err(Error::DimensionMismatch {
                expected: a.len(),
                found: b.len(),
            });
        }
        Ok(a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs())))
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["time".to_string()];
        header.extend(self.columns.iter().map(|(n, _)| n.clone()));
        w.write_record(&header)?;
        for (i, t) in self.times.iter().enumerate() {
            let mut row = vec![format!("{t:?}")];
            row.extend(self.columns.iter().map(|(_, v)| format!("{:?}", v[i])));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
        if header.first().map(String::as_str) != Some("time") {
            return Err(Error::MissingColumn("time".into()));
        }
        let mut times = Vec::new();
        let mut values = vec![Vec::new(); header.len() - 1];
        for record in r.records() {
            let record = record?;
            let parse = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Parse(format!("bad number `{s}`")))
            };
            times.push(parse(&record[0])?);
            for (col, v) in values.iter_mut().enumerate() {
                v.push(parse(&record[col + 1])?);
            }
        }
        let mut series = TimeSeries::new(times)?;
        for (name, v) in header[1..].iter().zip(values) {
            series.push_column(name, v)?;
        }
        Ok(series)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::read_csv(std::fs::File::open(path)?)
    }
}

/// Expectation values of named observables at each time, evaluated in parallel.
pub fn evolve_series(
    prop: &Propagator,
    psi0: &StateVector,
    times: &[f64],
    observables: &[(String, Operator)],
) -> Result<TimeSeries> {
    let mut series = TimeSeries::new(times.to_vec())?;
    let reduced = ReducedEvolution::new(prop, psi0, observables)?;
    let samples: Vec<Vec<C64>> = times.par_iter().map(|&t| reduced.sample(t)).collect();
    let worst_imag = samples
        .iter()
        .flatten()
        .fold(0.0_f64, |m, z| m.max(z.im.abs()));
    if worst_imag > IMAG_TOLERANCE {
        return Err(Error::NotHermitian(worst_imag));
    }
    for (col, (name, _)) in observables.iter().enumerate() {
        series.push_column(name, samples.iter().map(|s| s[col].re).collect())?;
    }
    Ok(series)
}

/// Population in the top `guard` Fock levels, maximised over the bosonic modes.
pub fn leakage(psi: &StateVector, guard: usize) -> Result<f64> {
    let dims = psi.space().mode_dims();
    let probs: Vec<f64> = psi.amps().iter().map(|z| z.norm_sqr()).collect();
    if dims.is_empty() {
        let d = psi.dim();
        if guard >= d {
            return Err(Error::InvalidConfig(format!(
                "guard {guard} must be below dim {d}"
            )));
        }
        return Ok(probs[d - guard..].iter().sum());
    }
    if dims.iter().any(|&d| guard >= d) {
        return Err(Error::InvalidConfig(format!(
            "guard {guard} must be below every mode dimension {dims:?}"
        )));
    }
    let marginals = crate::hilbert::mode_populations(psi);
    Ok(marginals
        .iter()
        .map(|p| p[p.len() - guard..].iter().sum::<f64>())
        .fold(0.0, f64::max))
}

/// Diagonal projectors onto the top `guard` levels of each mode, as observables.
pub fn leakage_observables(space: Space, guard: usize) -> Result<Vec<(String, Operator)>> {
    let dim = space.dim();
    let mode_dims = space.mode_dims();
    if mode_dims.iter().any(|&d| guard >= d) {
        return Err(Error::InvalidConfig(format!(
            "guard {guard} must be below every mode dimension {mode_dims:?}"
        )));
    }
    let mut out = Vec::new();
    match space {
        Space::Oscillator(d) => {
            let diag: Vec<f64> = (0..d)
                .map(|k| if k + guard >= d { 1.0 } else { 0.0 })
                .collect();
            out.push(("leak_mode1".to_string(), Operator::diagonal(&diag, space)?));
        }
        Space::TwoMode(d1, d2) | Space::Composite(d1, d2) => {
            let per_field = dim / (d1 * d2);
            let mut top1 = vec![0.0; dim];
            let mut top2 = vec![0.0; dim];
            for (i, (a, b)) in top1.iter_mut().zip(top2.iter_mut()).enumerate() {
                let field = i / per_field;
                if field / d2 + guard >= d1 {
                    *a = 1.0;
                }
                if field % d2 + guard >= d2 {
                    *b = 1.0;
                }
            }
            out.push(("leak_mode1".to_string(), Operator::diagonal(&top1, space)?));
            out.push(("leak_mode2".to_string(), Operator::diagonal(&top2, space)?));
        }
        Space::Qubit | Space::Generic(_) => {}
    }
    Ok(out)
}

/// Largest value of any `leak_*` column.
pub fn max_leakage(series: &TimeSeries) -> f64 {
    series
        .columns
        .iter()
        .filter(|(n, _)| n.starts_with("leak_"))
        .flat_map(|(_, v)| v.iter().copied())
        .fold(0.0, f64::max)
}

/// Rejects a run whose leakage exceeds `gate`.
pub fn leakage_gate(series: &TimeSeries, gate: f64) -> Result<f64> {
    let worst = max_leakage(series);
    if !(worst < gate) {
        return Err(Error::Truncation(format!(
            "leakage {worst:e} exceeds gate {gate:e}"
        )));
    }
    Ok(worst)
}

#[derive(Clone, Copy, Debug)]
pub struct TruncationReport {
    pub dim: usize,
    pub doubled_dim: usize,
    /// Largest change of any shared non-leakage column.
    pub max_change: f64,
}

/// Runs at `dim` and `2·dim` and rejects the result unless every observable
/// sample moves by less than `tol`.
pub fn truncation_doubling<F>(
    dim: usize,
    tol: f64,
    run: F,
) -> Result<(TimeSeries, TruncationReport)>
where
    F: Fn(usize) -> Result<TimeSeries>,
{
    let base = run(dim)?;
    let doubled = run(2 * dim)?;
    let mut max_change: f64 = 0.0;
    for name in base.names().filter(|n| !n.starts_with("leak_")) {
        max_change = max_change.max(base.max_abs_diff(&doubled, name)?);
    }
    let report = TruncationReport {
        dim,
        doubled_dim: 2 * dim,
        max_change,
    };
    if !(max_change < tol) {
        return Err(Error::Truncation(format!(
            "doubling the dimension from {dim} changed observables by {max_change:e} (tolerance {tol:e})"
        )));
    }
    Ok((base, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{coherent_state, number, Space};
    use proptest::prelude::*;

    fn random_hermitian(dim: usize, seed: u64) -> Operator {
        // Small deterministic LCG; proptest drives the seed.
        let mut state = seed
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        let mut next = || {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        let mut m = Array2::<C64>::zeros((dim, dim));
        for i in 0..dim {
            m[[i, i]] = C64::new(next(), 0.0);
            for j in i + 1..dim {
                let z = C64::new(next(), next());
                m[[i, j]] = z;
                m[[j, i]] = z.conj();
            }
        }
        Operator::new(m, Space::Generic(dim)).unwrap()
    }

    #[test]
    fn free_oscillator_phase() {
        let omega = 1.3;
        let h = omega * &number(6).unwrap();
        let prop = make_propagator(&h).unwrap();
        let one = StateVector::basis(1, Space::Oscillator(6)).unwrap();
        let t = 2.1;
        let out = prop.evolve(&one, t).unwrap();
        let overlap = one.inner(&out).unwrap();
        assert!((overlap - C64::from_polar(1.0, -omega * t)).norm() < 1e-12);
        assert!((prop.evolve(&one, 0.0).unwrap().max_abs_diff(&one)) < 1e-14);
    }

    #[test]
    fn rejects_non_hermitian() {
        let mut m = Array2::<C64>::zeros((2, 2));
        m[[0, 1]] = C64::new(1.0, 0.0);
        let op = Operator::new(m, Space::Generic(2)).unwrap();
        assert!(matches!(make_propagator(&op), Err(Error::NotHermitian(_))));
    }

    #[test]
    fn series_of_identity_and_number() {
        let h = number(20).unwrap();
        let prop = make_propagator(&h).unwrap();
        let psi = coherent_state(C64::new(1.0, 0.0), 20).unwrap();
        let times = TimeSeries::uniform(5.0, 11).unwrap();
        let obs = vec![
            ("one".to_string(), Operator::identity(Space::Oscillator(20))),
            ("n".to_string(), number(20).unwrap()),
        ];
        let s = evolve_series(&prop, &psi, &times, &obs).unwrap();
        assert!(s
            .column("one")
            .unwrap()
            .iter()
            .all(|v| (v - 1.0).abs() < 1e-12));
        let n0 = s.column("n").unwrap()[0];
        assert!(s
            .column("n")
            .unwrap()
            .iter()
            .all(|v| (v - n0).abs() < 1e-12));
        assert!(matches!(s.column("missing"), Err(Error::MissingColumn(_))));
    }

    #[test]
    fn reduced_and_full_evolution_agree() {
        let h = random_hermitian(24, 7);
        let prop = make_propagator(&h).unwrap();
        assert!(prop.unitarity_error() < 1e-10);
        assert!(prop.reconstruction_error(&h) < 1e-10);
        let psi = StateVector::basis(3, Space::Generic(24)).unwrap();
        let obs_op = random_hermitian(24, 11);
        let times = [0.0, 0.7, 3.3];
        let s = evolve_series(&prop, &psi, &times, &[("o".to_string(), obs_op.clone())]).unwrap();
        for (i, &t) in times.iter().enumerate() {
            let full =
                crate::hilbert::expectation(&obs_op, &prop.evolve(&psi, t).unwrap()).unwrap();
            assert!((full.re - s.column("o").unwrap()[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn leakage_examples() {
        let vac = StateVector::basis(0, Space::Oscillator(8)).unwrap();
        assert_eq!(leakage(&vac, 2).unwrap(), 0.0);
        let top = StateVector::basis(7, Space::Oscillator(8)).unwrap();
        assert_eq!(leakage(&top, 1).unwrap(), 1.0);
        let coh = coherent_state(C64::new(1.0, 0.0), 32).unwrap();
        assert!(leakage(&coh, 4).unwrap() < 1e-10);
        assert!(leakage(&vac, 8).is_err());
        let composite = StateVector::composite_fock(0, 3, 1, 4, 4).unwrap();
        assert_eq!(leakage(&composite, 1).unwrap(), 1.0);
    }

    #[test]
    fn csv_round_trip() {
        let mut s = TimeSeries::new(vec![0.0, 0.5, 1.0]).unwrap();
        s.push_column("n", vec![0.0, 0.1234567890123, 1.0 / 3.0])
            .unwrap();
        s.push_column("sz", vec![-1.0, -0.9, 2e-17]).unwrap();
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        assert!(String::from_utf8(buf.clone())
            .unwrap()
            .starts_with("time,n,sz\n"));
        let back = TimeSeries::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back, s);
        assert!(TimeSeries::new(vec![0.0, 0.0]).is_err());
        assert!(s.push_column("bad", vec![1.0]).is_err());
    }

    #[test]
    fn doubling_protocol() {
        let run = |d: usize| {
            let h = number(d).unwrap();
            let prop = make_propagator(&h).unwrap();
            let psi = coherent_state(C64::new(0.5, 0.0), d).unwrap();
            evolve_series(
                &prop,
                &psi,
                &[0.0, 1.0],
                &[("n".to_string(), number(d).unwrap())],
            )
        };
        let (_, report) = truncation_doubling(24, 1e-8, run).unwrap();
        assert!(report.max_change < 1e-8);
        assert!(matches!(
            truncation_doubling(3, 1e-8, run),
            Err(Error::Truncation(_))
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn norm_is_preserved(seed in any::<u64>(), t in 0.0f64..50.0) {
            let h = random_hermitian(64, seed);
            let prop = make_propagator(&h).unwrap();
            let psi = StateVector::basis((seed % 64) as usize, Space::Generic(64)).unwrap();
            let out = prop.evolve(&psi, t).unwrap();
            prop_assert!((out.norm_sqr() - 1.0).abs() < 1e-12);
        }
    }
}
