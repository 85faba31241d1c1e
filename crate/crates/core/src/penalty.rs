//! Matrix penalties on the coefficient matrix.
//!
//! Row and column group penalties act on indices `k >= 1` (0-based), so the
//! group for column `k` contains the linear-effect entry `B[0,k]` together
//! with every interaction involving covariate `k`. Shrinking a whole column to
//! zero therefore removes a main effect and all of its interactions at once.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::model::{weighted_outer_sum, Dataset, Precomputation};
use crate::prox::{
    prox_group_l2, prox_hybrid_l1_linf, prox_linf, prox_nuclear, soft, ProxScale,
};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PenaltyKind {
    /// Entrywise `||B||_1` over the masked entries.
    L1AllPairs,
    /// `||B||_*`.
    Nuclear,
    GroupL2Rows,
    GroupL2Cols,
    LInfRows,
    LInfCols,
    /// `sum_k max(|B[k,0]|, ||B[k,1..]||_1)`.
    HybridL1LInfRows,
    /// `sum_k max(|B[0,k]|, ||B[1..,k]||_1)`.
    HybridL1LInfCols,
}

impl PenaltyKind {
    fn transposed(self) -> Option<PenaltyKind> {
        use PenaltyKind::*;
        match self {
            GroupL2Rows => Some(GroupL2Cols),
            GroupL2Cols => Some(GroupL2Rows),
            LInfRows => Some(LInfCols),
            LInfCols => Some(LInfRows),
            HybridL1LInfRows => Some(HybridL1LInfCols),
            HybridL1LInfCols => Some(HybridL1LInfRows),
            L1AllPairs | Nuclear => None,
        }
    }

    fn is_row(self) -> bool {
        matches!(
            self,
            PenaltyKind::GroupL2Rows | PenaltyKind::LInfRows | PenaltyKind::HybridL1LInfRows
        )
    }
}

/// Which entries the all-pairs `l1` term penalizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum MaskPolicy {
    /// Leave the intercept `B[0,0]` unpenalized.
    #[default]
    ExcludeIntercept,
    PenalizeAll,
}

impl MaskPolicy {
    #[inline]
    fn penalizes(self, j: usize, k: usize) -> bool {
        !(self == MaskPolicy::ExcludeIntercept && j == 0 && k == 0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PenaltyTerm<T: Real> {
    pub kind: PenaltyKind,
    pub weight: T,
    pub mask: MaskPolicy,
}

impl<T: Real> PenaltyTerm<T> {
    pub fn new(kind: PenaltyKind, weight: T) -> Result<Self> {
        if !weight.is_finite() || weight < T::zero() {
            return Err(Error::param("weight", format!("must be finite and >= 0, got {weight}")));
        }
        Ok(PenaltyTerm {
            kind,
            weight,
            mask: MaskPolicy::default(),
        })
    }

    pub fn with_mask(mut self, mask: MaskPolicy) -> Self {
        self.mask = mask;
        self
    }
}

/// A penalty family: one norm, applied in the symmetric row + column form
/// where it is a group norm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PenaltyFamily {
    L1,
    Nuclear,
    GroupL2,
    LInf,
    HybridL1LInf,
}

impl PenaltyFamily {
    pub fn kinds(self) -> &'static [PenaltyKind] {
        use PenaltyKind::*;
        match self {
            PenaltyFamily::L1 => &[L1AllPairs],
            PenaltyFamily::Nuclear => &[Nuclear],
            PenaltyFamily::GroupL2 => &[GroupL2Rows, GroupL2Cols],
            PenaltyFamily::LInf => &[LInfRows, LInfCols],
            PenaltyFamily::HybridL1LInf => &[HybridL1LInfRows, HybridL1LInfCols],
        }
    }

    /// Whether `B[0,0]` is left out of the family under `mask`.
    pub fn leaves_intercept_free(self, mask: MaskPolicy) -> bool {
        match self {
            PenaltyFamily::L1 => mask == MaskPolicy::ExcludeIntercept,
            PenaltyFamily::Nuclear => false,
            PenaltyFamily::GroupL2 | PenaltyFamily::LInf | PenaltyFamily::HybridL1LInf => true,
        }
    }

    pub const ALL: [PenaltyFamily; 5] = [
        PenaltyFamily::L1,
        PenaltyFamily::Nuclear,
        PenaltyFamily::GroupL2,
        PenaltyFamily::LInf,
        PenaltyFamily::HybridL1LInf,
    ];
}

/// Named penalty combinations. The string names are stable and used by the
/// command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Preset {
    L1,
    L1L2,
    L1LInf,
    L1HybridL1LInf,
    L1Nuclear,
}

impl Preset {
    pub const ALL: [Preset; 5] = [
        Preset::L1,
        Preset::L1L2,
        Preset::L1LInf,
        Preset::L1HybridL1LInf,
        Preset::L1Nuclear,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::L1 => "l1",
            Preset::L1L2 => "l1+l2",
            Preset::L1LInf => "l1+linf",
            Preset::L1HybridL1LInf => "l1+l1linf",
            Preset::L1Nuclear => "l1+nuclear",
        }
    }

    /// The `l1` family and the optional second family.
    pub fn families(self) -> (PenaltyFamily, Option<PenaltyFamily>) {
        let second = match self {
            Preset::L1 => None,
            Preset::L1L2 => Some(PenaltyFamily::GroupL2),
            Preset::L1LInf => Some(PenaltyFamily::LInf),
            Preset::L1HybridL1LInf => Some(PenaltyFamily::HybridL1LInf),
            Preset::L1Nuclear => Some(PenaltyFamily::Nuclear),
        };
        (PenaltyFamily::L1, second)
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s.trim().to_ascii_lowercase())
            .ok_or_else(|| {
                Error::param(
                    "penalty",
                    format!("unknown preset `{s}` (expected one of l1, l1+l2, l1+linf, l1+l1linf, l1+nuclear)"),
                )
            })
    }
}

/// Ordered list of penalty terms; the ADMM engine gives each its own block.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PenaltySpec<T: Real> {
    terms: Vec<PenaltyTerm<T>>,
}

impl<T: Real> PenaltySpec<T> {
    pub fn empty() -> Self {
        PenaltySpec { terms: Vec::new() }
    }

    /// Validates that every row/column group kind is paired with its
    /// transpose at equal weight, so that `f(B) = f(B')`.
    pub fn from_terms(terms: Vec<PenaltyTerm<T>>) -> Result<Self> {
        for term in &terms {
            if let Some(partner) = term.kind.transposed() {
                let paired = terms
                    .iter()
                    .any(|t| t.kind == partner && t.weight == term.weight);
                if !paired {
                    return Err(Error::param(
                        "penalty",
                        format!("{:?} must be paired with {:?} at equal weight", term.kind, partner),
                    ));
                }
            }
        }
        Ok(PenaltySpec { terms })
    }

    /// All terms of one family at a common weight.
    pub fn family(family: PenaltyFamily, weight: T, mask: MaskPolicy) -> Result<Self> {
        let terms = family
            .kinds()
            .iter()
            .map(|&kind| PenaltyTerm::new(kind, weight).map(|t| t.with_mask(mask)))
            .collect::<Result<Vec<_>>>()?;
        Self::from_terms(terms)
    }

    /// `lambda1 * l1 + lambda2 * second family`. Single-family presets ignore
    /// `lambda2`.
    pub fn preset(preset: Preset, lambda1: T, lambda2: T, mask: MaskPolicy) -> Result<Self> {
        let (first, second) = preset.families();
        let mut terms = Self::family(first, lambda1, mask)?.terms;
        if let Some(second) = second {
            terms.extend(Self::family(second, lambda2, mask)?.terms);
        }
        Self::from_terms(terms)
    }

    pub fn terms(&self) -> &[PenaltyTerm<T>] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }
}

fn column_norms<T: Real>(b: &DMatrix<T>, norm: impl Fn(T, &[T]) -> T) -> T {
    let mut total = T::zero();
    let mut rest = Vec::with_capacity(b.nrows().saturating_sub(1));
    for k in 1..b.ncols() {
        let col = b.column(k);
        rest.clear();
        rest.extend(col.iter().skip(1).copied());
        total += norm(col[0], &rest);
    }
    total
}

/// `weight * norm(B)` for one term.
pub fn eval_penalty<T: Real>(term: &PenaltyTerm<T>, b: &DMatrix<T>) -> T {
    let l2 = |head: T, rest: &[T]| {
        rest.iter().fold(head * head, |acc, &v| acc + v * v).sqrt()
    };
    let linf = |head: T, rest: &[T]| rest.iter().fold(head.abs(), |acc, v| acc.max(v.abs()));
    let hybrid = |head: T, rest: &[T]| {
        head.abs().max(rest.iter().fold(T::zero(), |acc, v| acc + v.abs()))
    };

    let norm = match term.kind {
        PenaltyKind::L1AllPairs => {
            let mut total = T::zero();
            for k in 0..b.ncols() {
                for j in 0..b.nrows() {
                    if term.mask.penalizes(j, k) {
                        total += b[(j, k)].abs();
                    }
                }
            }
            total
        }
        PenaltyKind::Nuclear => b.singular_values().sum(),
        PenaltyKind::GroupL2Cols => column_norms(b, l2),
        PenaltyKind::LInfCols => column_norms(b, linf),
        PenaltyKind::HybridL1LInfCols => column_norms(b, hybrid),
        PenaltyKind::GroupL2Rows => column_norms(&b.transpose(), l2),
        PenaltyKind::LInfRows => column_norms(&b.transpose(), linf),
        PenaltyKind::HybridL1LInfRows => column_norms(&b.transpose(), hybrid),
    };
    term.weight * norm
}

fn prox_columns<T: Real>(
    a: &DMatrix<T>,
    scale: ProxScale<T>,
    op: impl Fn(&[T], ProxScale<T>) -> Vec<T>,
) -> DMatrix<T> {
    let mut out = a.clone();
    let mut buf = Vec::with_capacity(a.nrows());
    for k in 1..a.ncols() {
        buf.clear();
        buf.extend(a.column(k).iter().copied());
        let shrunk = op(&buf, scale);
        out.column_mut(k).copy_from_slice(&shrunk);
    }
    out
}

/// `argmin_B term(B) + rho/2 ||B - A||^2`.
pub fn prox_penalty_term<T: Real>(
    term: &PenaltyTerm<T>,
    a: &DMatrix<T>,
    rho: T,
) -> Result<DMatrix<T>> {
    if !rho.is_finite() || rho <= T::zero() {
        return Err(Error::param("rho", format!("must be finite and > 0, got {rho}")));
    }
    if term.weight == T::zero() {
        return Ok(a.clone());
    }
    let scale = ProxScale::new(term.weight / rho)?;
    let t = scale.get();

    if term.kind.is_row() {
        let col_kind = term.kind.transposed().expect("row kinds have a column partner");
        let col_term = PenaltyTerm { kind: col_kind, ..*term };
        return Ok(prox_penalty_term(&col_term, &a.transpose(), rho)?.transpose());
    }

    Ok(match term.kind {
        PenaltyKind::L1AllPairs => {
            let mut out = a.clone();
            for k in 0..a.ncols() {
                for j in 0..a.nrows() {
                    if term.mask.penalizes(j, k) {
                        out[(j, k)] = soft(a[(j, k)], t);
                    }
                }
            }
            out
        }
        PenaltyKind::Nuclear => prox_nuclear(a, scale)?,
        PenaltyKind::GroupL2Cols => prox_columns(a, scale, prox_group_l2),
        PenaltyKind::LInfCols => prox_columns(a, scale, prox_linf),
        PenaltyKind::HybridL1LInfCols => prox_columns(a, scale, prox_hybrid_l1_linf),
        PenaltyKind::GroupL2Rows | PenaltyKind::LInfRows | PenaltyKind::HybridL1LInfRows => {
            unreachable!("row kinds handled above")
        }
    })
}

/// Smallest penalty level (a sufficient one for paired group families) at
/// which `B = 0` on the penalized entries is optimal, given the negative loss
/// gradient `r` at the best fit of the unpenalized entries.
///
/// Group families use the dual norm of each column with the interaction part
/// split evenly between the row and column subgradients; `r[0,k]` lies only in
/// column `k`'s group and is taken in full.
pub fn lambda_max<T: Real>(family: PenaltyFamily, mask: MaskPolicy, r: &DMatrix<T>) -> T {
    let half = T::lit(0.5);
    let per_column = |f: &dyn Fn(T, &mut dyn Iterator<Item = T>) -> T| {
        (1..r.ncols()).fold(T::zero(), |acc, k| {
            let col = r.column(k);
            let mut rest = col.iter().skip(1).map(|&v| v * half);
            acc.max(f(col[0], &mut rest))
        })
    };
    match family {
        PenaltyFamily::L1 => {
            let mut best = T::zero();
            for k in 0..r.ncols() {
                for j in 0..r.nrows() {
                    if mask.penalizes(j, k) {
                        best = best.max(r[(j, k)].abs());
                    }
                }
            }
            best
        }
        PenaltyFamily::Nuclear => r.singular_values().max(),
        PenaltyFamily::GroupL2 => per_column(&|head, rest| {
            rest.fold(head * head, |acc, v| acc + v * v).sqrt()
        }),
        PenaltyFamily::LInf => per_column(&|head, rest| {
            rest.fold(head.abs(), |acc, v| acc + v.abs())
        }),
        PenaltyFamily::HybridL1LInf => per_column(&|head, rest| {
            head.abs() + rest.fold(T::zero(), |acc, v| acc.max(v.abs()))
        }),
    }
}

/// Negative loss gradient at the best fit that uses only the entries the
/// family leaves unpenalized. When `B[0,0]` is free this is
/// `D - b * n^{-1} sum_i x_i0^2 x_i x_i'` with `b` the least-squares value of
/// `B[0,0]`; otherwise it is `D`.
pub fn null_gradient<T: Real>(
    pre: &Precomputation<T>,
    data: &Dataset<T>,
    family: PenaltyFamily,
    mask: MaskPolicy,
) -> DMatrix<T> {
    if !family.leaves_intercept_free(mask) {
        return pre.d.clone();
    }
    let x = data.design();
    let sq: Vec<T> = x.column(0).iter().map(|&v| v * v).collect();
    let denom = sq.iter().fold(T::zero(), |acc, &s| acc + s * s);
    if denom == T::zero() {
        return pre.d.clone();
    }
    let numer = sq
        .iter()
        .zip(data.response().iter())
        .fold(T::zero(), |acc, (&s, &y)| acc + s * y);
    let b00 = numer / denom;
    let n = T::from_count(data.n());
    let weights: Vec<T> = sq.iter().map(|&s| s * b00 / n).collect();
    &pre.d - weighted_outer_sum(x, &weights)
}

/// `lambda_max` for `family` on a dataset.
pub fn lambda_max_for<T: Real>(
    pre: &Precomputation<T>,
    data: &Dataset<T>,
    family: PenaltyFamily,
    mask: MaskPolicy,
) -> T {
    lambda_max(family, mask, &null_gradient(pre, data, family, mask))
}
