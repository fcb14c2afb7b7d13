//! Even-order para-Bose ladder operators built from a deformed boson.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::hilbert::{parity_sign, Operator, Space, StateVector, C64, ZERO};

/// Number of top Fock levels excluded from algebra residuals.
pub const BOUNDARY_LEVELS: usize = 2;

/// Para-Bose order `p = 2(N + 1)`, indexed by `N`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ParaboseOrder {
    n: usize,
}

impl ParaboseOrder {
    pub fn new(n: usize) -> Self {
        ParaboseOrder { n }
    }

    /// Only even orders `p ≥ 2` can be realized.
    pub fn from_order(p: usize) -> Result<Self> {
        if p < 2 || p % 2 != 0 {
            return Err(Error::OddOrder(p));
        }
        Ok(ParaboseOrder { n: p / 2 - 1 })
    }

    pub fn index(&self) -> usize {
        self.n
    }

    pub fn order(&self) -> usize {
        2 * (self.n + 1)
    }
}

/// `f_N(k)`, the deformation that turns `a` into the para-Bose `A = f_N(n) a`.
pub fn deformation_f(n: usize, k: usize) -> f64 {
    let (nf, kf) = (n as f64, k as f64);
    let sign_k = parity_sign(k as i64);
    let radicand = (2.0 * kf + (2.0 * nf + 3.0) + (2.0 * nf + 1.0) * sign_k) / (2.0 * (kf + 1.0));
    radicand.sqrt() * parity_sign((k + n) as i64)
}

/// Matrix element `⟨k+1|A†|k⟩ = √(k+1) f_N(k)`.
pub fn raising_element(n: usize, k: usize) -> f64 {
    ((k + 1) as f64).sqrt() * deformation_f(n, k)
}

/// Ladder, number and parity operators of a truncated para-Bose oscillator.
#[derive(Clone, Debug)]
pub struct LadderOps {
    pub order: ParaboseOrder,
    pub lower: Operator,
    pub raise: Operator,
    pub number: Operator,
    pub parity: Operator,
}

pub fn ladder_ops(n: usize, dim: usize) -> Result<LadderOps> {
    if dim < 2 {
        return Err(Error::InvalidDimension(format!(
            "para-Bose ladder needs dim >= 2, got {dim}"
        )));
    }
    let space = Space::Oscillator(dim);
    let mut lower = Array2::<C64>::zeros((dim, dim));
    for k in 0..dim - 1 {
        lower[[k, k + 1]] = C64::new(raising_element(n, k), 0.0);
    }
    let lower = Operator::new(lower, space)?;
    let raise = lower.dagger();
    let number = Operator::diagonal(&(0..dim).map(|k| k as f64).collect::<Vec<_>>(), space)?;
    let parity = Operator::diagonal(
        &(0..dim).map(|k| parity_sign(k as i64)).collect::<Vec<_>>(),
        space,
    )?;
    Ok(LadderOps {
        order: ParaboseOrder::new(n),
        lower,
        raise,
        number,
        parity,
    })
}

impl LadderOps {
    pub fn dim(&self) -> usize {
        self.lower.dim()
    }

    /// `A + A†`.
    pub fn quadrature(&self) -> Operator {
        &self.lower + &self.raise
    }

    /// `⟨0|A A†|0⟩`.
    pub fn vacuum_value(&self) -> Result<f64> {
        let vac = StateVector::basis(0, self.lower.space())?;
        let out = self.lower.apply(&self.raise.apply(&vac)?)?;
        Ok(out.amps()[0].re)
    }
}

/// Interior residuals of the even-order para-Bose relations.
#[derive(Clone, Debug, PartialEq)]
pub struct AlgebraReport {
    pub order: ParaboseOrder,
    pub dim: usize,
    /// `[A, A†] − 1 − (2N+1)Π`.
    pub commutator_residual: f64,
    /// `{A, A†} − 2n − 2(N+1)`.
    pub anticommutator_residual: f64,
    /// `[n, A†] − A†`.
    pub number_commutator_residual: f64,
    /// `Π A Π + A`.
    pub parity_residual: f64,
    /// `⟨0|A A†|0⟩`, which should equal `2(N+1)`.
    pub vacuum_value: f64,
    pub boundary_rows_excluded: usize,
}

impl AlgebraReport {
    pub fn max_residual(&self) -> f64 {
        self.commutator_residual
            .max(self.anticommutator_residual)
            .max(self.number_commutator_residual)
            .max(self.parity_residual)
    }

    /// Whether every relation holds to `tol`, including the vacuum value.
    pub fn passes(&self, tol: f64) -> bool {
        self.max_residual() < tol && (self.vacuum_value - self.order.order() as f64).abs() < tol
    }
}

pub fn verify_algebra(n: usize, dim: usize) -> Result<AlgebraReport> {
    if dim < 4 {
        return Err(Error::InvalidDimension(format!(
            "algebra check needs dim >= 4, got {dim}"
        )));
    }
    let ops = ladder_ops(n, dim)?;
    let space = ops.lower.space();
    let id = Operator::identity(space);
    let interior = |i: usize| i < dim - BOUNDARY_LEVELS;
    let nf = n as f64;

    let comm = ops.lower.commutator(&ops.raise)?;
    let comm_target = &id + &((2.0 * nf + 1.0) * &ops.parity);
    let anti = ops.lower.anticommutator(&ops.raise)?;
    let anti_target = &(2.0 * &ops.number) + &((2.0 * (nf + 1.0)) * &id);
    let num = ops.number.commutator(&ops.raise)?;
    let par = &ops.parity.dot(&ops.lower)?.dot(&ops.parity)? + &ops.lower;

    Ok(AlgebraReport {
        order: ops.order,
        dim,
        commutator_residual: (&comm - &comm_target).max_abs_restricted(interior),
        anticommutator_residual: (&anti - &anti_target).max_abs_restricted(interior),
        number_commutator_residual: (&num - &ops.raise).max_abs_restricted(interior),
        parity_residual: par.max_abs(),
        vacuum_value: ops.vacuum_value()?,
        boundary_rows_excluded: BOUNDARY_LEVELS,
    })
}

impl fmt::Display for AlgebraReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "order_N={}", self.order.index())?;
        writeln!(f, "order_p={}", self.order.order())?;
        writeln!(f, "dim={}", self.dim)?;
        writeln!(f, "commutator_residual={:e}", self.commutator_residual)?;
        writeln!(
            f,
            "anticommutator_residual={:e}",
            self.anticommutator_residual
        )?;
        writeln!(
            f,
            "number_commutator_residual={:e}",
            self.number_commutator_residual
        )?;
        writeln!(f, "parity_residual={:e}", self.parity_residual)?;
        writeln!(f, "vacuum_value={}", self.vacuum_value)?;
        writeln!(f, "boundary_rows_excluded={}", self.boundary_rows_excluded)
    }
}

/// Parses `key=value` lines, ignoring blanks and `#` comments.
pub fn parse_key_values(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for line in text.lines().map(str::trim) {
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("expected key=value, got `{line}`")))?;
        map.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(map)
}

fn field<T: FromStr>(map: &BTreeMap<String, String>, key: &str) -> Result<T> {
    let raw = map
        .get(key)
        .ok_or_else(|| Error::Parse(format!("missing key `{key}`")))?;
    raw.parse()
        .map_err(|_| Error::Parse(format!("bad value for `{key}`: {raw}")))
}

impl FromStr for AlgebraReport {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let map = parse_key_values(s)?;
        Ok(AlgebraReport {
            order: ParaboseOrder::new(field(&map, "order_N")?),
            dim: field(&map, "dim")?,
            commutator_residual: field(&map, "commutator_residual")?,
            anticommutator_residual: field(&map, "anticommutator_residual")?,
            number_commutator_residual: field(&map, "number_commutator_residual")?,
            parity_residual: field(&map, "parity_residual")?,
            vacuum_value: field(&map, "vacuum_value")?,
            boundary_rows_excluded: field(&map, "boundary_rows_excluded")?,
        })
    }
}

/// Applies `A†` to a para-Bose Fock state, returning the single nonzero amplitude.
pub fn raise_fock(ops: &LadderOps, k: usize) -> Result<(usize, C64)> {
    let psi = StateVector::basis(k, ops.lower.space())?;
    let out = ops.raise.apply(&psi)?;
    let amp = if k + 1 < ops.dim() {
        out.amps()[k + 1]
    } else {
        ZERO
    };
    Ok((k + 1, amp))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn deformation_values() {
        assert!((deformation_f(0, 0) - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(deformation_f(0, 1), -1.0);
        assert_eq!(deformation_f(1, 0), -2.0);
    }

    #[test]
    fn ladder_actions() {
        let ops = ladder_ops(0, 8).unwrap();
        let vac = StateVector::basis(0, Space::Oscillator(8)).unwrap();
        assert_eq!(ops.lower.apply(&vac).unwrap().norm_sqr(), 0.0);
        let (k, amp) = raise_fock(&ops, 0).unwrap();
        assert_eq!(k, 1);
        assert!((amp.re - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(ops.raise.max_abs_diff(&ops.lower.dagger()), 0.0);
        assert!(ladder_ops(0, 1).is_err());
    }

    #[test]
    fn vacuum_value_is_order() {
        for n in 0..5 {
            let ops = ladder_ops(n, 16).unwrap();
            assert!((ops.vacuum_value().unwrap() - 2.0 * (n as f64 + 1.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn algebra_holds_in_interior() {
        for n in [0, 3] {
            let r = verify_algebra(n, 64).unwrap();
            assert!(r.passes(1e-12), "{r}");
            assert_eq!(r.boundary_rows_excluded, 2);
        }
        assert!(verify_algebra(0, 3).is_err());
    }

    #[test]
    fn truncation_shows_up_at_the_boundary() {
        let ops = ladder_ops(0, 10).unwrap();
        let comm = ops.lower.commutator(&ops.raise).unwrap();
        let target = &Operator::identity(comm.space()) + &ops.parity;
        assert!((&comm - &target).max_abs() > 1.0);
    }

    #[test]
    fn odd_orders_rejected() {
        assert!(matches!(
            ParaboseOrder::from_order(1),
            Err(Error::OddOrder(1))
        ));
        assert!(ParaboseOrder::from_order(3).is_err());
        assert_eq!(ParaboseOrder::from_order(4).unwrap().index(), 1);
        assert_eq!(ParaboseOrder::new(2).order(), 6);
    }

    #[test]
    fn report_round_trips() {
        let r = verify_algebra(2, 20).unwrap();
        let back: AlgebraReport = r.to_string().parse().unwrap();
        assert_eq!(back, r);
    }

    proptest! {
        #[test]
        fn radicand_is_half_numerator(n in 0usize..8, k in 0usize..=100) {
            let f = deformation_f(n, k);
            let s = parity_sign(k as i64);
            let numerator = 2.0 * k as f64 + 2.0 * n as f64 + 3.0 + (2.0 * n as f64 + 1.0) * s;
            prop_assert!(((k as f64 + 1.0) * f * f - numerator / 2.0).abs() < 1e-12);
            prop_assert!(numerator >= 0.0);
        }

        #[test]
        fn algebra_for_small_orders(n in 0usize..=6) {
            let r = verify_algebra(n, 64).unwrap();
            prop_assert!(r.passes(1e-12));
            prop_assert!(r.parity_residual < 1e-14);
        }
    }
}
