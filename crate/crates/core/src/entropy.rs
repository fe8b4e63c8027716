//! Shannon entropies of convolution powers of the step law, used as upper
//! bounds for the asymptotic (Avez) entropy, plus two closed-form constants.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::groups::{word_ball, GeneratorSet, GroupError};
use crate::hyperbolic::Isometry;

/// Default budget of accumulated atom updates for [`avez_upper_bounds`].
pub const DEFAULT_ATOM_BUDGET: u64 = 100_000_000;

/// Probe points used to audit that merged atoms really are the same element.
pub const PROBE_POINTS: [Complex64; 2] = [Complex64::new(0.31, 0.17), Complex64::new(-0.05, -0.43)];

#[derive(Debug, Error)]
pub enum EntropyError {
    #[error(
        "quantisation collision at n = {n}: two elements share a key but move probe points \
         {deviation:.3e} apart (grid {grid:e} too coarse)"
    )]
    QuantizationCollision { n: usize, deviation: f64, grid: f64 },
    #[error("step {n} would need {needed} atom updates, above the budget of {budget}")]
    BudgetExceeded { n: usize, needed: u64, budget: u64 },
    #[error("{bound} does not apply to {group}: {reason}")]
    NotApplicable {
        bound: &'static str,
        group: String,
        reason: String,
    },
    #[error(transparent)]
    Group(#[from] GroupError),
}

/// Tolerances for identifying group elements by their matrices.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KeyConfig {
    pub grid: f64,
    pub audit_tolerance: f64,
    pub budget: u64,
}

impl Default for KeyConfig {
    fn default() -> Self {
        KeyConfig {
            grid: 1e-8,
            audit_tolerance: 1e-6,
            budget: DEFAULT_ATOM_BUDGET,
        }
    }
}

/// A hashable fingerprint of a group element: the orientation flag and the
/// four matrix entries `a, b, b̄, ā` after fixing the sign of `±M` and
/// rounding. The rounding cell is `grid · 2^scale` where `2^scale` is the
/// power of two just below `|a|`, so large elements are compared to the same
/// relative precision as small ones.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ElementKey {
    pub flag: bool,
    pub scale: i32,
    pub fingerprint: [i64; 8],
}

const SIGN_THRESHOLD: f64 = 1e-6;
/// Fraction of a grid cell near a rounding boundary where the neighbouring
/// cell is also searched.
const EDGE_MARGIN: f64 = 0.05;
const SCALE_MARGIN: f64 = 1e-6;

fn unscaled(g: &Isometry) -> [f64; 4] {
    let f = g.log_scale.exp();
    [g.a.re * f, g.a.im * f, g.b.re * f, g.b.im * f]
}

fn log2_size(g: &Isometry) -> f64 {
    (g.a.norm().ln() + g.log_scale).max(0.0) / std::f64::consts::LN_2
}

fn sign_normalized(mut c: [f64; 4]) -> ([f64; 4], f64) {
    let lead = c.iter().copied().find(|x| x.abs() > SIGN_THRESHOLD).unwrap_or(1.0);
    if lead < 0.0 {
        c.iter_mut().for_each(|x| *x = -*x);
    }
    (c, lead.abs())
}

fn key_from_cells(flag: bool, scale: i32, q: [i64; 4]) -> ElementKey {
    ElementKey {
        flag,
        scale,
        fingerprint: [q[0], q[1], q[2], q[3], q[2], -q[3], q[0], -q[1]],
    }
}

impl ElementKey {
    pub fn of(g: &Isometry, grid: f64) -> ElementKey {
        let (c, _) = sign_normalized(unscaled(g));
        let scale = log2_size(g).floor() as i32;
        let cell = grid * (scale as f64).exp2();
        key_from_cells(g.antiholomorphic, scale, c.map(|x| (x / cell).round() as i64))
    }

    /// The primary key followed by keys of neighbouring cells that rounding
    /// error could have produced instead.
    pub fn candidates(g: &Isometry, grid: f64) -> Vec<ElementKey> {
        let raw = unscaled(g);
        let mut variants = vec![sign_normalized(raw)];
        if variants[0].1 < 1e-4 {
            let (c, _) = variants[0];
            variants.push((c.map(|x| -x), 0.0));
        }
        let size = log2_size(g);
        let base = size.floor() as i32;
        let mut scales = vec![base];
        if size - (base as f64) < SCALE_MARGIN && base > 0 {
            scales.push(base - 1);
        }
        if (base as f64) + 1.0 - size < SCALE_MARGIN {
            scales.push(base + 1);
        }
        let mut out = Vec::new();
        for &scale in &scales {
            let cell = grid * (scale as f64).exp2();
            for (c, _) in &variants {
                let mut cells: Vec<[i64; 4]> = vec![[0; 4]];
                for (i, x) in c.iter().enumerate() {
                    let v = x / cell;
                    let k = v.round();
                    let frac = v - k;
                    let mut next = Vec::with_capacity(cells.len() * 2);
                    for q in &cells {
                        let mut q0 = *q;
                        q0[i] = k as i64;
                        next.push(q0);
                        if frac.abs() > 0.5 - EDGE_MARGIN {
                            let mut q1 = *q;
                            q1[i] = (k + frac.signum()) as i64;
                            next.push(q1);
                        }
                    }
                    cells = next;
                }
                out.extend(cells.into_iter().map(|q| key_from_cells(g.antiholomorphic, scale, q)));
            }
        }
        out
    }
}

/// Largest displacement between the actions of two isometries on the probe
/// points.
pub fn probe_deviation(g: &Isometry, h: &Isometry) -> f64 {
    if g.antiholomorphic != h.antiholomorphic {
        return f64::INFINITY;
    }
    PROBE_POINTS
        .iter()
        .map(|&p| (g.apply_complex(p) - h.apply_complex(p)).norm())
        .fold(0.0, f64::max)
}

/// A finitely supported probability measure on the group: the law of the
/// walk after `n` steps.
#[derive(Debug, Clone)]
pub struct ConvolutionDistribution {
    pub atoms: BTreeMap<ElementKey, (f64, Isometry)>,
    pub n: usize,
}

impl ConvolutionDistribution {
    pub fn point_mass() -> Self {
        let mut atoms = BTreeMap::new();
        atoms.insert(ElementKey::of(&Isometry::IDENTITY, KeyConfig::default().grid), (1.0, Isometry::IDENTITY));
        ConvolutionDistribution { atoms, n: 0 }
    }

    pub fn total_mass(&self) -> f64 {
        self.atoms.values().map(|(p, _)| p).sum()
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }
}

/// Inserts `(g, p)` into `atoms`, merging with an existing atom for the same
/// element. Returns the audit deviation on a key collision.
fn merge_atom(
    atoms: &mut BTreeMap<ElementKey, (f64, Isometry)>,
    g: Isometry,
    p: f64,
    config: &KeyConfig,
) -> Result<(), f64> {
    let candidates = ElementKey::candidates(&g, config.grid);
    for key in &candidates {
        if let Some((q, rep)) = atoms.get_mut(key) {
            let dev = probe_deviation(rep, &g);
            if dev > config.audit_tolerance {
                return Err(dev);
            }
            *q += p;
            return Ok(());
        }
    }
    atoms.insert(candidates[0], (p, g));
    Ok(())
}

/// One more step of the walk: `ν^{*(n+1)} = ν^{*n} * ν`.
///
/// Products are not renormalised: dividing by `√(|a|²−|b|²)` turns an entry
/// error `η` into a scalar error of order `|a|²η`, which moves keys, while
/// unimodular factors keep the determinant at 1 to within `nε`.
pub fn convolve_step(
    dist: &ConvolutionDistribution,
    gens: &GeneratorSet,
    config: &KeyConfig,
) -> Result<ConvolutionDistribution, EntropyError> {
    let steps = gens.symmetric_closure();
    let weights = gens.step_distribution();
    let atoms: Vec<_> = dist.atoms.values().collect();
    let products: Vec<Vec<(Isometry, f64)>> = atoms
        .par_iter()
        .map(|(p, g)| {
            steps
                .iter()
                .zip(weights)
                .filter(|(_, &q)| q > 0.0)
                .map(|(s, &q)| (g.compose_raw(&s.map), p * q))
                .collect()
        })
        .collect();
    let mut out = BTreeMap::new();
    for (g, p) in products.into_iter().flatten() {
        merge_atom(&mut out, g, p, config).map_err(|deviation| EntropyError::QuantizationCollision {
            n: dist.n + 1,
            deviation,
            grid: config.grid,
        })?;
    }
    Ok(ConvolutionDistribution {
        atoms: out,
        n: dist.n + 1,
    })
}

/// `−Σ p log p` in nats.
pub fn shannon_entropy(dist: &ConvolutionDistribution) -> f64 {
    dist.atoms
        .values()
        .map(|&(p, _)| if p > 0.0 { -p * p.ln() } else { 0.0 })
        .sum()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum EntropySource {
    Enumeration,
    FreeGroupRank4,
    FreeProductZ2cubed,
    External { provenance: String },
}

impl EntropySource {
    pub fn describe(&self) -> String {
        match self {
            EntropySource::Enumeration => "enumeration".into(),
            EntropySource::FreeGroupRank4 => "free_group_rank4".into(),
            EntropySource::FreeProductZ2cubed => "free_product_Z2cubed".into(),
            EntropySource::External { provenance } => format!("external ({provenance})"),
        }
    }
}

/// An upper bound on the asymptotic entropy, in nats. `n` is the
/// convolution power it came from, or 0 for a constant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyBound {
    pub value: f64,
    pub n: usize,
    pub source: EntropySource,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntropyRow {
    pub n: usize,
    pub entropy: f64,
    pub atom_count: usize,
}

impl EntropyRow {
    pub fn per_step(&self) -> f64 {
        self.entropy / self.n as f64
    }
}

/// `H(ν^{*n})` for `n = 1..=n_max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyTable {
    pub rows: Vec<EntropyRow>,
}

impl EntropyTable {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("n,H_n,H_n/n,atom_count\n");
        for r in &self.rows {
            writeln!(s, "{},{:.15},{:.15},{}", r.n, r.entropy, r.per_step(), r.atom_count).unwrap();
        }
        s
    }

    pub fn bounds(&self) -> Vec<EntropyBound> {
        self.rows
            .iter()
            .map(|r| EntropyBound {
                value: r.per_step(),
                n: r.n,
                source: EntropySource::Enumeration,
            })
            .collect()
    }

    /// Largest violation of `H_{m+n} <= H_m + H_n` over all computed splits
    /// (negative or zero when subadditive).
    pub fn subadditivity_excess(&self) -> f64 {
        let h = |n: usize| self.rows[n - 1].entropy;
        let mut worst = f64::NEG_INFINITY;
        for m in 1..=self.rows.len() {
            for n in 1..=self.rows.len() - m {
                worst = worst.max(h(m + n) - h(m) - h(n));
            }
        }
        worst
    }
}

pub fn entropy_table(
    gens: &GeneratorSet,
    n_max: usize,
    config: &KeyConfig,
) -> Result<EntropyTable, EntropyError> {
    let q = gens.step_distribution().iter().filter(|&&p| p > 0.0).count() as u64;
    let mut dist = ConvolutionDistribution::point_mass();
    let mut used: u64 = 0;
    let mut rows = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        let needed = used + dist.len() as u64 * q;
        if needed > config.budget {
            return Err(EntropyError::BudgetExceeded {
                n,
                needed,
                budget: config.budget,
            });
        }
        used = needed;
        dist = convolve_step(&dist, gens, config)?;
        rows.push(EntropyRow {
            n,
            entropy: shannon_entropy(&dist),
            atom_count: dist.len(),
        });
    }
    Ok(EntropyTable { rows })
}

/// The bounds `H(ν^{*n})/n >= h_A` for `n = 1..=n_max`.
pub fn avez_upper_bounds(
    gens: &GeneratorSet,
    n_max: usize,
    config: &KeyConfig,
) -> Result<Vec<EntropyBound>, EntropyError> {
    Ok(entropy_table(gens, n_max, config)?.bounds())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClosedForm {
    /// Entropy of the simple walk on the free group of rank 4.
    FreeGroupRank4,
    /// Entropy of the simple walk on `Z/2 * Z/2 * Z/2`.
    FreeProductZ2cubed,
}

impl ClosedForm {
    pub fn value(self) -> f64 {
        match self {
            ClosedForm::FreeGroupRank4 => 0.75 * 7f64.ln(),
            ClosedForm::FreeProductZ2cubed => 2f64.ln() / 3.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ClosedForm::FreeGroupRank4 => "free_group_rank4",
            ClosedForm::FreeProductZ2cubed => "free_product_Z2cubed",
        }
    }

    pub fn applicability(self) -> &'static str {
        match self {
            ClosedForm::FreeGroupRank4 => {
                "uniform walk on 4 generators and their inverses (any quotient of F_4)"
            }
            ClosedForm::FreeProductZ2cubed => {
                "uniform walk on 3 involutions (any quotient of Z/2 * Z/2 * Z/2)"
            }
        }
    }

    /// Entropy can only drop under a quotient map, so the constant bounds
    /// any group whose uniform walk is the image of the free one.
    pub fn check_applies(self, gens: &GeneratorSet, group: &str) -> Result<(), EntropyError> {
        let (count, involutions) = match self {
            ClosedForm::FreeGroupRank4 => (4, 0),
            ClosedForm::FreeProductZ2cubed => (3, 3),
        };
        let reason = if gens.generators.len() != count {
            Some(format!("needs {count} generators, found {}", gens.generators.len()))
        } else if gens.involution_count() != involutions {
            Some(format!(
                "needs {involutions} involutive generators, found {}",
                gens.involution_count()
            ))
        } else if !gens.is_uniform() {
            Some("step law is not uniform".into())
        } else {
            None
        };
        match reason {
            None => Ok(()),
            Some(reason) => Err(EntropyError::NotApplicable {
                bound: self.name(),
                group: group.into(),
                reason,
            }),
        }
    }

    pub fn source(self) -> EntropySource {
        match self {
            ClosedForm::FreeGroupRank4 => EntropySource::FreeGroupRank4,
            ClosedForm::FreeProductZ2cubed => EntropySource::FreeProductZ2cubed,
        }
    }
}

pub fn closed_form_bound(kind: ClosedForm) -> EntropyBound {
    EntropyBound {
        value: kind.value(),
        n: 0,
        source: kind.source(),
    }
}

/// The distinct group elements among all words of length `<= radius`, in
/// order of first appearance in shortlex order.
pub fn distinct_elements(
    gens: &GeneratorSet,
    radius: usize,
    budget: u64,
    config: &KeyConfig,
) -> Result<Vec<Isometry>, EntropyError> {
    let steps = gens.symmetric_closure();
    let words = word_ball(gens, radius, budget)?;
    let mut seen: BTreeMap<ElementKey, (f64, Isometry)> = BTreeMap::new();
    let mut out = Vec::new();
    for (word, _) in words {
        let g = word
            .iter()
            .fold(Isometry::IDENTITY, |acc, &s| acc.compose_raw(&steps[s].map));
        let before = seen.len();
        merge_atom(&mut seen, g, 0.0, config).map_err(|deviation| EntropyError::QuantizationCollision {
            n: radius,
            deviation,
            grid: config.grid,
        })?;
        if seen.len() > before {
            out.push(g.renormalized());
        }
    }
    Ok(out)
}
