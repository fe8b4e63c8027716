//! Upper bounds on the Hausdorff dimension of the harmonic measure from an
//! entropy upper bound and a drift lower bound, and the resulting verdict.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::entropy::{ClosedForm, EntropyBound, EntropyError, EntropySource};
use crate::groups::GeneratorSet;
use crate::walk::DriftEstimate;

#[derive(Debug, Error)]
pub enum DimensionError {
    #[error("drift lower bound must be positive (got {0})")]
    NonPositiveDrift(f64),
    #[error("entropy bound must be non-negative (got {0})")]
    NegativeEntropy(f64),
    #[error("incompatible entropy source: {0}")]
    Incompatible(#[from] EntropyError),
}

/// `h / ℓ`, an upper bound on `dim_H(ν)` when `h >= h_A` and `ℓ <= drift`.
pub fn dimension_bound(h_upper: f64, ell_lower: f64) -> Result<f64, DimensionError> {
    if !(ell_lower > 0.0) {
        return Err(DimensionError::NonPositiveDrift(ell_lower));
    }
    if !(h_upper >= 0.0) {
        return Err(DimensionError::NegativeEntropy(h_upper));
    }
    Ok(h_upper / ell_lower)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Singular,
    Inconclusive,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Singular => "Singular",
            Verdict::Inconclusive => "Inconclusive",
        })
    }
}

/// A dimension bound below 1 rules out absolute continuity; anything else
/// proves nothing.
pub fn verdict(dim_upper: f64) -> Verdict {
    if dim_upper < 1.0 {
        Verdict::Singular
    } else {
        Verdict::Inconclusive
    }
}

/// Where the drift lower bound comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "interpretation", rename_all = "snake_case")]
pub enum DriftInput {
    /// A sampled estimate; its lower bound is `mean − 3·stderr`.
    Statistical(DriftEstimate),
    /// A certified lower bound from elsewhere.
    ExternalRigorous { lower: f64, provenance: String },
}

impl DriftInput {
    pub fn effective_lower(&self) -> f64 {
        match self {
            DriftInput::Statistical(e) => e.mean - 3.0 * e.stderr,
            DriftInput::ExternalRigorous { lower, .. } => *lower,
        }
    }

    pub fn is_statistical(&self) -> bool {
        matches!(self, DriftInput::Statistical(_))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionReport {
    pub group_id: String,
    pub entropy_bound: EntropyBound,
    pub drift_input: DriftInput,
    pub effective_drift_lower: f64,
    pub dim_upper: f64,
    pub verdict: Verdict,
    pub confidence_note: String,
}

impl DimensionReport {
    /// The verdict as it should be shown: statistical singularity is never
    /// reported as a plain `Singular`.
    pub fn verdict_label(&self) -> String {
        match (self.verdict, self.drift_input.is_statistical()) {
            (Verdict::Singular, true) => "Singular (statistical)".into(),
            (v, _) => v.to_string(),
        }
    }

    /// Whether `dim_upper` and the verdict follow from the stored inputs.
    pub fn is_consistent(&self) -> bool {
        let lower = self.drift_input.effective_lower();
        lower == self.effective_drift_lower
            && dimension_bound(self.entropy_bound.value, lower)
                .map(|d| (d - self.dim_upper).abs() <= 1e-15 * d.abs().max(1.0))
                .unwrap_or(false)
            && verdict(self.dim_upper) == self.verdict
    }

    pub fn render_text(&self) -> String {
        format!(
            "group          {}\nentropy bound  {:.9} ({})\ndrift lower    {:.9}\ndim upper      {:.9}\nverdict        {}\nnote           {}\n",
            self.group_id,
            self.entropy_bound.value,
            self.entropy_bound.source.describe(),
            self.effective_drift_lower,
            self.dim_upper,
            self.verdict_label(),
            self.confidence_note
        )
    }
}

fn closed_form_of(source: &EntropySource) -> Option<ClosedForm> {
    match source {
        EntropySource::FreeGroupRank4 => Some(ClosedForm::FreeGroupRank4),
        EntropySource::FreeProductZ2cubed => Some(ClosedForm::FreeProductZ2cubed),
        _ => None,
    }
}

/// Combines an entropy bound and a drift input for `gens`, rejecting
/// closed-form constants that do not apply to this generating set.
pub fn build_report(
    group_id: &str,
    gens: &GeneratorSet,
    entropy: EntropyBound,
    drift: DriftInput,
) -> Result<DimensionReport, DimensionError> {
    if let Some(kind) = closed_form_of(&entropy.source) {
        kind.check_applies(gens, group_id)?;
    }
    let lower = drift.effective_lower();
    let dim_upper = dimension_bound(entropy.value, lower)?;
    let v = verdict(dim_upper);
    let confidence_note = match &drift {
        DriftInput::Statistical(e) => format!(
            "statistical: drift lower bound is mean - 3*stderr = {:.9} - 3*{:.3e} from {} ({} trials of {} steps); not a proof",
            e.mean,
            e.stderr,
            e.method.as_str(),
            e.trials,
            e.n
        ),
        DriftInput::ExternalRigorous { provenance, .. } => {
            format!("rigorous given the external drift bound: {provenance}")
        }
    };
    Ok(DimensionReport {
        group_id: group_id.into(),
        entropy_bound: entropy,
        drift_input: drift,
        effective_drift_lower: lower,
        dim_upper,
        verdict: v,
        confidence_note,
    })
}

/// A published rigorous drift interval.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReferenceDrift {
    pub lower: f64,
    pub upper: f64,
    pub citation: String,
}

/// One row of the published table of drift intervals for triangle groups.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Table1Entry {
    pub k: u32,
    pub l: u32,
    pub m: u32,
    pub lower: f64,
    pub upper: f64,
}

impl Table1Entry {
    pub fn group_id(&self) -> String {
        format!("triangle:{},{},{}", self.k, self.l, self.m)
    }

    pub fn citation(&self) -> String {
        format!(
            "published rigorous drift interval for the ({},{},{}) triangle group",
            self.k, self.l, self.m
        )
    }
}

const fn row(k: u32, l: u32, m: u32, lower: f64, upper: f64) -> Table1Entry {
    Table1Entry { k, l, m, lower, upper }
}

pub const TABLE1: [Table1Entry; 23] = [
    row(3, 7, 2, 0.009936413804542, 0.009974294432083),
    row(3, 8, 2, 0.016242376981342, 0.016295700460901),
    row(3, 9, 2, 0.020422904820936, 0.020508218335138),
    row(4, 5, 2, 0.024263195172778, 0.024341830945392),
    row(4, 6, 2, 0.037765501277040, 0.037870175386186),
    row(4, 8, 2, 0.050724918174930, 0.050934249274956),
    row(5, 5, 2, 0.046019792084900, 0.046155635941842),
    row(5, 6, 2, 0.058159239428682, 0.058334985605960),
    row(5, 7, 2, 0.065329026703739, 0.065563197936118),
    row(6, 6, 2, 0.069559814745121, 0.069846131636394),
    row(4, 3, 3, 0.046694831446660, 0.046816105401585),
    row(5, 3, 3, 0.069435926662536, 0.069689191304812),
    row(6, 3, 3, 0.081515978567027, 0.081925767935374),
    row(7, 3, 3, 0.088431558608918, 0.089059709051931),
    row(3, 4, 4, 0.088752444507380, 0.088919437571219),
    row(3, 6, 6, 0.148515148139248, 0.149179933451390),
    row(4, 4, 4, 0.128086862380309, 0.128344145942091),
    row(5, 5, 5, 0.182618423778876, 0.183286144055414),
    row(6, 6, 6, 0.209779208475952, 0.211031605163552),
    row(7, 7, 7, 0.224864828238411, 0.228908301867331),
    row(8, 8, 8, 0.232248419011566, 0.238574707256068),
    row(9, 9, 9, 0.236782098913020, 0.247054233672500),
    row(10, 10, 10, 0.240409132283172, 0.252180931190328),
];

/// Drift interval shared by the Bolza and Gutzwiller surface groups.
pub const OCTAGON_DRIFT_LOWER: f64 = 1.690771;
pub const OCTAGON_DRIFT_UPPER: f64 = 1.691313;

fn sorted(mut v: [u32; 3]) -> [u32; 3] {
    v.sort_unstable();
    v
}

/// The table row for `(k,l,m)` in any order: permuting the angles gives the
/// same group and the same uniform walk.
pub fn table1_entry(k: u32, l: u32, m: u32) -> Option<&'static Table1Entry> {
    let key = sorted([k, l, m]);
    TABLE1.iter().find(|r| sorted([r.k, r.l, r.m]) == key)
}

fn parse_triangle(id: &str) -> Option<(u32, u32, u32)> {
    let rest = id.strip_prefix("triangle:")?;
    let v: Vec<u32> = rest.split(',').map(|s| s.trim().parse().ok()).collect::<Option<_>>()?;
    match v.as_slice() {
        &[k, l, m] => Some((k, l, m)),
        _ => None,
    }
}

/// The embedded reference interval for a preset id, if there is one.
pub fn reference_drift(group_id: &str) -> Option<ReferenceDrift> {
    match group_id {
        "bolza" | "gutzwiller" => Some(ReferenceDrift {
            lower: OCTAGON_DRIFT_LOWER,
            upper: OCTAGON_DRIFT_UPPER,
            citation: "published rigorous drift interval for the genus-2 octagon surface groups \
                       (Bolza and Gutzwiller pairings)"
                .into(),
        }),
        _ => {
            let (k, l, m) = parse_triangle(group_id)?;
            let r = table1_entry(k, l, m)?;
            Some(ReferenceDrift {
                lower: r.lower,
                upper: r.upper,
                citation: r.citation(),
            })
        }
    }
}
