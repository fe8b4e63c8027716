//! Generator sets for the octagon surface groups and the hyperbolic triangle
//! reflection groups, with their fundamental polygons and relators.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hyperbolic::{
    geodesic_through, karcher_mean, reflection_in, DiskPoint,
    GeodesicArc, GeometryError, Isometry,
};

/// Upper bound on the number of words materialised by [`word_ball`].
pub const DEFAULT_WORD_BUDGET: u64 = 10_000_000;

#[derive(Debug, Error)]
pub enum GroupError {
    #[error("({k},{l},{m}) is not hyperbolic: 1/{k} + 1/{l} + 1/{m} = {sum:.6} >= 1")]
    NotHyperbolic { k: u32, l: u32, m: u32, sum: f64 },
    #[error("triangle angles need k, l, m >= 2 (got ({k},{l},{m}))")]
    DegenerateAngle { k: u32, l: u32, m: u32 },
    #[error("side pairing is not a fixed-point-free involution on 8 sides: {0:?}")]
    BadPairing(Vec<usize>),
    #[error("unknown group id `{0}` (expected bolza, gutzwiller or triangle:k,l,m)")]
    UnknownPreset(String),
    #[error("malformed word `{0}`")]
    BadWord(String),
    #[error("word ball of radius {radius} has {count} words, above the budget of {budget}")]
    BudgetExceeded { radius: usize, count: u64, budget: u64 },
    #[error("step distribution must have {expected} non-negative weights summing to 1")]
    BadDistribution { expected: usize },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// One generator or generator inverse in a word.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Letter {
    pub generator: usize,
    pub inverse: bool,
}

impl Letter {
    pub fn new(generator: usize, inverse: bool) -> Self {
        Letter { generator, inverse }
    }
}

/// A word in the generators, read left to right as a composition.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Word(pub Vec<Letter>);

impl Word {
    pub fn empty() -> Self {
        Word(Vec::new())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `w^count`.
    pub fn power(&self, count: usize) -> Word {
        Word(self.0.iter().copied().cycle().take(self.0.len() * count).collect())
    }

    pub fn inverse(&self) -> Word {
        Word(
            self.0
                .iter()
                .rev()
                .map(|l| Letter::new(l.generator, !l.inverse))
                .collect(),
        )
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "e");
        }
        for (i, l) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "g{}", l.generator + 1)?;
            if l.inverse {
                write!(f, "^-1")?;
            }
        }
        Ok(())
    }
}

impl FromStr for Word {
    type Err = GroupError;

    /// Parses `g1 g2^-1 g3` (1-based labels); `e` is the empty word.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s == "e" || s.is_empty() {
            return Ok(Word::empty());
        }
        s.split_whitespace()
            .map(|tok| {
                let bad = || GroupError::BadWord(s.to_string());
                let body = tok.strip_prefix('g').ok_or_else(bad)?;
                let (num, inverse) = match body.strip_suffix("^-1") {
                    Some(n) => (n, true),
                    None => (body, false),
                };
                let idx: usize = num.parse().map_err(|_| bad())?;
                if idx == 0 {
                    return Err(bad());
                }
                Ok(Letter::new(idx - 1, inverse))
            })
            .collect::<Result<Vec<_>, _>>()
            .map(Word)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Generator {
    pub label: String,
    pub map: Isometry,
    pub is_involution: bool,
}

/// An element of the symmetric generating set, i.e. one possible walk step.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Step {
    pub label: String,
    pub map: Isometry,
    pub letter: Letter,
    /// Index of this step's inverse within the closure.
    pub inverse_index: usize,
}

/// A labelled generating family together with the walk's step law.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GeneratorSet {
    pub generators: Vec<Generator>,
    /// Probability of each element of [`GeneratorSet::symmetric_closure`].
    step_distribution: Vec<f64>,
    pub relators: Vec<Word>,
}

impl GeneratorSet {
    /// A generator set with the uniform step law over the distinct elements
    /// of the symmetric closure.
    pub fn new(generators: Vec<Generator>, relators: Vec<Word>) -> Self {
        let mut gens = GeneratorSet {
            generators,
            step_distribution: Vec::new(),
            relators,
        };
        let n = gens.closure_len();
        gens.step_distribution = vec![1.0 / n as f64; n];
        gens
    }

    fn closure_len(&self) -> usize {
        self.generators
            .iter()
            .map(|g| if g.is_involution { 1 } else { 2 })
            .sum()
    }

    pub fn with_step_distribution(mut self, weights: Vec<f64>) -> Result<Self, GroupError> {
        let expected = self.closure_len();
        let total: f64 = weights.iter().sum();
        if weights.len() != expected
            || weights.iter().any(|&w| !(w >= 0.0))
            || (total - 1.0).abs() > 1e-12
        {
            return Err(GroupError::BadDistribution { expected });
        }
        self.step_distribution = weights.iter().map(|w| w / total).collect();
        Ok(self)
    }

    pub fn step_distribution(&self) -> &[f64] {
        &self.step_distribution
    }

    pub fn is_uniform(&self) -> bool {
        let first = self.step_distribution[0];
        self.step_distribution.iter().all(|&p| p == first)
    }

    /// Distinct elements of `{g_i^{±1}}`: involutions once, every other
    /// generator followed by its inverse.
    pub fn symmetric_closure(&self) -> Vec<Step> {
        let mut steps = Vec::with_capacity(self.closure_len());
        for (i, g) in self.generators.iter().enumerate() {
            let here = steps.len();
            if g.is_involution {
                steps.push(Step {
                    label: g.label.clone(),
                    map: g.map,
                    letter: Letter::new(i, false),
                    inverse_index: here,
                });
            } else {
                steps.push(Step {
                    label: format!("{}+", g.label),
                    map: g.map,
                    letter: Letter::new(i, false),
                    inverse_index: here + 1,
                });
                steps.push(Step {
                    label: format!("{}-", g.label),
                    map: g.map.inverse(),
                    letter: Letter::new(i, true),
                    inverse_index: here,
                });
            }
        }
        steps
    }

    /// Number of generators that are involutions.
    pub fn involution_count(&self) -> usize {
        self.generators.iter().filter(|g| g.is_involution).count()
    }

    /// Evaluates a word as an isometry.
    pub fn evaluate(&self, word: &Word) -> Isometry {
        let mut acc = Isometry::IDENTITY;
        for (k, l) in word.0.iter().enumerate() {
            let g = &self.generators[l.generator].map;
            let g = if l.inverse { g.inverse() } else { *g };
            acc = acc.compose_raw(&g);
            if k % 16 == 15 {
                acc.renormalize();
            }
        }
        acc.renormalized()
    }

    /// The same generators conjugated by `t`, i.e. seen from `t`'s frame.
    pub fn conjugated(&self, t: &Isometry) -> GeneratorSet {
        GeneratorSet {
            generators: self
                .generators
                .iter()
                .map(|g| Generator {
                    map: g.map.conjugate_by(t),
                    ..g.clone()
                })
                .collect(),
            ..self.clone()
        }
    }
}

/// A convex fundamental polygon; `sides[i]` joins `vertices[i]` to `vertices[i+1]`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FundamentalPolygon {
    pub vertices: Vec<DiskPoint>,
    pub sides: Vec<GeodesicArc>,
    /// Interior angle at each vertex.
    pub angles: Vec<f64>,
}

impl FundamentalPolygon {
    pub fn from_vertices(vertices: Vec<DiskPoint>, angles: Vec<f64>) -> Result<Self, GroupError> {
        let n = vertices.len();
        let sides = (0..n)
            .map(|i| geodesic_through(vertices[i], vertices[(i + 1) % n]))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(FundamentalPolygon {
            vertices,
            sides,
            angles,
        })
    }

    /// Interior angle at each vertex measured from the side tangents.
    pub fn measured_angles(&self) -> Vec<f64> {
        let n = self.vertices.len();
        (0..n)
            .map(|i| {
                let v = self.vertices[i].z();
                let next = self.vertices[(i + 1) % n].z();
                let prev = self.vertices[(i + n - 1) % n].z();
                let t_out = self.sides[i].tangent_at(v, next);
                let t_in = self.sides[(i + n - 1) % n].tangent_at(v, prev);
                (t_out.conj() * t_in).arg().abs()
            })
            .collect()
    }

    /// `count` points evenly spaced (hyperbolically) along side `i`, endpoints included.
    pub fn side_samples(&self, i: usize, count: usize) -> Vec<DiskPoint> {
        let n = self.vertices.len();
        let (p, q) = (self.vertices[i], self.vertices[(i + 1) % n]);
        let to_origin = Isometry::moving_to_origin(p);
        let back = to_origin.inverse();
        let q0 = to_origin.apply(q).z();
        let len = 2.0 * q0.norm().atanh();
        (0..count)
            .map(|j| {
                let s = len * j as f64 / (count - 1) as f64;
                back.apply(DiskPoint::polar(s, q0.arg()))
            })
            .collect()
    }

    /// Image of the polygon under `g`.
    pub fn image(&self, g: &Isometry) -> Result<FundamentalPolygon, GroupError> {
        Self::from_vertices(
            self.vertices.iter().map(|&v| g.apply(v)).collect(),
            self.angles.clone(),
        )
    }
}

/// Involution on side indices of a polygon.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairingScheme {
    pub permutation: Vec<usize>,
}

impl PairingScheme {
    pub fn new(permutation: Vec<usize>) -> Result<Self, GroupError> {
        let n = permutation.len();
        let ok = permutation
            .iter()
            .enumerate()
            .all(|(i, &j)| j < n && j != i && permutation[j] == i);
        if ok {
            Ok(PairingScheme { permutation })
        } else {
            Err(GroupError::BadPairing(permutation))
        }
    }

    /// Side pairs `(i, j)` with `i < j`, in order of `i`.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        self.permutation
            .iter()
            .enumerate()
            .filter(|&(i, &j)| i < j)
            .map(|(i, &j)| (i, j))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum OctagonPairing {
    /// Opposite sides: `s ↦ s + 4 (mod 8)`.
    Bolza,
    /// Alternating sides: `(0 2)(1 3)(4 6)(5 7)`.
    Gutzwiller,
    Custom(PairingScheme),
}

impl OctagonPairing {
    pub fn scheme(&self) -> PairingScheme {
        match self {
            OctagonPairing::Bolza => PairingScheme {
                permutation: (0..8).map(|s| (s + 4) % 8).collect(),
            },
            OctagonPairing::Gutzwiller => PairingScheme {
                permutation: vec![2, 3, 0, 1, 6, 7, 4, 5],
            },
            OctagonPairing::Custom(p) => p.clone(),
        }
    }
}

/// Where the triangle of a triangle group sits in the disk.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum TrianglePlacement {
    /// Hyperbolic barycentre of the vertices at the origin.
    #[default]
    Barycenter,
    /// The `π/k` vertex at the origin.
    VertexAtOrigin,
}

/// Closed cycle of polygon vertices under the side pairing.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VertexCycle {
    pub vertices: Vec<usize>,
    pub angle_sum: f64,
}

/// A constructed group: generators, fundamental polygon and diagnostics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroupPreset {
    pub id: String,
    pub gens: GeneratorSet,
    pub polygon: FundamentalPolygon,
    pub warnings: Vec<String>,
}

/// Hyperbolic law of cosines: length of the side opposite `opposite` in a
/// triangle with the other two angles `adj1`, `adj2`.
pub fn side_length(opposite: f64, adj1: f64, adj2: f64) -> f64 {
    ((opposite.cos() + adj1.cos() * adj2.cos()) / (adj1.sin() * adj2.sin())).acosh()
}

pub fn build_triangle_group(k: u32, l: u32, m: u32) -> Result<GroupPreset, GroupError> {
    build_triangle_group_with(k, l, m, TrianglePlacement::Barycenter)
}

/// The `(k, l, m)` reflection group. `g1, g2` meet at angle `π/k`, `g2, g3` at
/// `π/l` and `g3, g1` at `π/m`.
pub fn build_triangle_group_with(
    k: u32,
    l: u32,
    m: u32,
    placement: TrianglePlacement,
) -> Result<GroupPreset, GroupError> {
    if k < 2 || l < 2 || m < 2 {
        return Err(GroupError::DegenerateAngle { k, l, m });
    }
    let sum = 1.0 / k as f64 + 1.0 / l as f64 + 1.0 / m as f64;
    // exact rational test: lm + km + kl < klm
    let (k64, l64, m64) = (k as u64, l as u64, m as u64);
    if l64 * m64 + k64 * m64 + k64 * l64 >= k64 * l64 * m64 {
        return Err(GroupError::NotHyperbolic { k, l, m, sum });
    }
    let angles = [PI / k as f64, PI / l as f64, PI / m as f64];
    // vertex i carries angles[i]; side lengths opposite each vertex
    let opposite_1 = side_length(angles[1], angles[2], angles[0]);
    let opposite_2 = side_length(angles[2], angles[0], angles[1]);

    // vertex 0 at the origin, vertex 1 on the positive real axis
    let mut verts = [
        DiskPoint::ORIGIN,
        DiskPoint::polar(opposite_2, 0.0),
        DiskPoint::polar(opposite_1, angles[0]),
    ];
    if placement == TrianglePlacement::Barycenter {
        let center = karcher_mean(&verts, 1e-12);
        let shift = Isometry::moving_to_origin(center);
        let moved: Vec<_> = verts.iter().map(|&v| shift.apply(v)).collect();
        let spin = Isometry::rotation(-moved[0].z().arg());
        for (v, w) in verts.iter_mut().zip(&moved) {
            *v = spin.apply(*w);
        }
    }

    let polygon = FundamentalPolygon::from_vertices(verts.to_vec(), angles.to_vec())?;
    // sides[0] = v0v1, sides[1] = v1v2, sides[2] = v2v0
    let g1 = reflection_in(&polygon.sides[2]);
    let g2 = reflection_in(&polygon.sides[0]);
    let g3 = reflection_in(&polygon.sides[1]);
    let generators = [g1, g2, g3]
        .into_iter()
        .enumerate()
        .map(|(i, map)| Generator {
            label: format!("g{}", i + 1),
            map,
            is_involution: true,
        })
        .collect();

    let letter = |i| Letter::new(i, false);
    let mut relators: Vec<Word> = (0..3).map(|i| Word(vec![letter(i), letter(i)])).collect();
    relators.push(Word(vec![letter(0), letter(1)]).power(k as usize));
    relators.push(Word(vec![letter(1), letter(2)]).power(l as usize));
    relators.push(Word(vec![letter(2), letter(0)]).power(m as usize));

    Ok(GroupPreset {
        id: format!("triangle:{k},{l},{m}"),
        gens: GeneratorSet::new(generators, relators),
        polygon,
        warnings: Vec::new(),
    })
}

/// Circumradius of the regular octagon with interior angles π/4.
pub fn octagon_circumradius() -> f64 {
    let cot = 1.0 / (PI / 8.0).tan();
    (cot * cot).acosh()
}

/// Regular octagon with angles π/4, centred at the origin; side `j` is
/// perpendicular to the diameter at angle `jπ/4`.
pub fn regular_octagon() -> FundamentalPolygon {
    let r = octagon_circumradius();
    let vertices = (0..8)
        .map(|j| DiskPoint::polar(r, (2 * j as i32 - 1) as f64 * PI / 8.0))
        .collect();
    FundamentalPolygon::from_vertices(vertices, vec![PI / 4.0; 8])
        .expect("octagon vertices are distinct")
}

/// Verified relator of the Gutzwiller generators, found by exhaustive search
/// over reduced words of length 8.
pub const GUTZWILLER_RELATOR: &str = "g1 g2 g1^-1 g4^-1 g3 g4 g3^-1 g2^-1";
/// Relator of the Bolza generators.
pub const BOLZA_RELATOR: &str = "g1 g2^-1 g3 g4^-1 g1^-1 g2 g3^-1 g4";

/// Side-pairing group of the regular octagon. For the pair `(i, j)`, `i < j`,
/// the generator maps side `j` onto side `i` and carries the octagon across side `i`.
pub fn build_octagon_group(pairing: OctagonPairing) -> Result<GroupPreset, GroupError> {
    let scheme = pairing.scheme();
    if scheme.permutation.len() != 8 {
        return Err(GroupError::BadPairing(scheme.permutation));
    }
    let scheme = PairingScheme::new(scheme.permutation)?;
    let polygon = regular_octagon();
    let side_angle = |s: usize| s as f64 * PI / 4.0;

    let generators: Vec<Generator> = scheme
        .pairs()
        .into_iter()
        .enumerate()
        .map(|(n, (i, j))| {
            let swap = Isometry::diameter_reflection((side_angle(i) + side_angle(j)) / 2.0);
            Generator {
                label: format!("g{}", n + 1),
                map: reflection_in(&polygon.sides[i]).compose(&swap),
                is_involution: false,
            }
        })
        .collect();

    let (id, relators) = match pairing {
        OctagonPairing::Bolza => ("bolza".to_string(), vec![BOLZA_RELATOR.parse()?]),
        OctagonPairing::Gutzwiller => {
            ("gutzwiller".to_string(), vec![GUTZWILLER_RELATOR.parse()?])
        }
        OctagonPairing::Custom(ref p) => (format!("octagon:{:?}", p.permutation), Vec::new()),
    };
    let gens = GeneratorSet::new(generators, relators);

    let mut warnings = Vec::new();
    let cycles = vertex_cycles(&polygon, &scheme, &gens);
    match cycles {
        Some(cycles) => {
            for c in &cycles {
                if (c.angle_sum - TAU).abs() > 1e-9 {
                    warnings.push(format!(
                        "vertex cycle {:?} has angle sum {:.6} != 2π; the images do not tile",
                        c.vertices, c.angle_sum
                    ));
                }
            }
        }
        None => warnings.push("side pairing does not map vertices to vertices".into()),
    }
    Ok(GroupPreset {
        id,
        gens,
        polygon,
        warnings,
    })
}

/// Vertex cycles of a side-paired polygon with one generator per side pair
/// (as built by [`build_octagon_group`]).
pub fn vertex_cycles(
    polygon: &FundamentalPolygon,
    scheme: &PairingScheme,
    gens: &GeneratorSet,
) -> Option<Vec<VertexCycle>> {
    let n = polygon.vertices.len();
    // map carrying side s onto side π(s)
    let mut side_map = vec![Isometry::IDENTITY; n];
    for (g, (i, j)) in gens.generators.iter().zip(scheme.pairs()) {
        side_map[j] = g.map;
        side_map[i] = g.map.inverse();
    }
    let find_vertex = |z: DiskPoint| {
        (0..n).find(|&v| (polygon.vertices[v].z() - z.z()).norm() < 1e-8)
    };
    // a (vertex, side) flag: side is one of the two sides at the vertex
    let mut seen = vec![false; n];
    let mut cycles = Vec::new();
    for start in 0..n {
        if seen[start] {
            continue;
        }
        let mut cycle = Vec::new();
        let (mut v, mut side) = (start, start);
        loop {
            seen[v] = true;
            cycle.push(v);
            let w = find_vertex(side_map[side].apply(polygon.vertices[v]))?;
            let image_side = scheme.permutation[side];
            // the other side at w
            let next_side = if image_side == w { (w + n - 1) % n } else { w };
            if image_side != w && image_side != (w + n - 1) % n {
                return None;
            }
            v = w;
            side = next_side;
            if v == start && side == start {
                break;
            }
            if cycle.len() > n {
                return None;
            }
        }
        let angle_sum = cycle.iter().map(|&v| polygon.angles[v]).sum();
        cycles.push(VertexCycle {
            vertices: cycle,
            angle_sum,
        });
    }
    Some(cycles)
}

/// Looks up a group by id: `bolza`, `gutzwiller` or `triangle:k,l,m`.
pub fn preset(id: &str) -> Result<GroupPreset, GroupError> {
    let id = id.trim();
    match id {
        "bolza" => build_octagon_group(OctagonPairing::Bolza),
        "gutzwiller" => build_octagon_group(OctagonPairing::Gutzwiller),
        _ => {
            let unknown = || GroupError::UnknownPreset(id.to_string());
            let params = id.strip_prefix("triangle:").ok_or_else(unknown)?;
            let nums = params
                .split(',')
                .map(|s| s.trim().parse::<u32>().map_err(|_| unknown()))
                .collect::<Result<Vec<_>, _>>()?;
            match nums[..] {
                [k, l, m] => build_triangle_group(k, l, m),
                _ => Err(unknown()),
            }
        }
    }
}

/// Deviation of one relator from `±I`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RelatorCheck {
    pub word: String,
    pub deviation: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RelatorReport {
    pub tolerance: f64,
    pub checks: Vec<RelatorCheck>,
}

impl RelatorReport {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn max_deviation(&self) -> f64 {
        self.checks.iter().map(|c| c.deviation).fold(0.0, f64::max)
    }
}

pub fn verify_relators(gens: &GeneratorSet, tol: f64) -> RelatorReport {
    verify_words(gens, &gens.relators, tol)
}

/// Evaluates arbitrary words against `±I`.
pub fn verify_words(gens: &GeneratorSet, words: &[Word], tol: f64) -> RelatorReport {
    let checks = words
        .iter()
        .map(|w| {
            let deviation = gens.evaluate(w).distance_from_identity();
            RelatorCheck {
                word: w.to_string(),
                deviation,
                pass: deviation < tol,
            }
        })
        .collect();
    RelatorReport {
        tolerance: tol,
        checks,
    }
}

/// Every word of length `<= radius` over the symmetric closure, in shortlex
/// order, with its (renormalised) isometry. Words are closure indices.
pub fn word_ball(
    gens: &GeneratorSet,
    radius: usize,
    budget: u64,
) -> Result<Vec<(Vec<usize>, Isometry)>, GroupError> {
    let steps = gens.symmetric_closure();
    let q = steps.len() as u64;
    let mut count: u64 = 0;
    let mut layer: u64 = 1;
    for _ in 0..=radius {
        count = count.saturating_add(layer);
        layer = layer.saturating_mul(q);
    }
    if count > budget {
        return Err(GroupError::BudgetExceeded {
            radius,
            count,
            budget,
        });
    }
    let mut out = Vec::with_capacity(count as usize);
    out.push((Vec::new(), Isometry::IDENTITY));
    let mut start = 0;
    for _ in 0..radius {
        let end = out.len();
        for idx in start..end {
            for (s, step) in steps.iter().enumerate() {
                let (word, g): &(Vec<usize>, Isometry) = &out[idx];
                let mut w = word.clone();
                w.push(s);
                let h = g.compose(&step.map);
                out.push((w, h));
            }
        }
        start = end;
    }
    Ok(out)
}

/// Freely reduced words of length `1..=max_len` over the closure that
/// evaluate to `±I` within `tol`. Each relator is reported once up to cyclic
/// rotation and inversion, as its lexicographically smallest representative.
pub fn find_relators(gens: &GeneratorSet, max_len: usize, tol: f64) -> Vec<Word> {
    let steps = gens.symmetric_closure();
    let mut found: Vec<Vec<usize>> = Vec::new();
    let mut word = Vec::with_capacity(max_len);
    fn dfs(
        steps: &[Step],
        max_len: usize,
        tol: f64,
        acc: Isometry,
        word: &mut Vec<usize>,
        found: &mut Vec<Vec<usize>>,
    ) {
        if !word.is_empty() && acc.distance_from_identity() < tol {
            found.push(word.clone());
            return;
        }
        if word.len() == max_len {
            return;
        }
        for (s, step) in steps.iter().enumerate() {
            if let Some(&last) = word.last() {
                if steps[last].inverse_index == s {
                    continue;
                }
            }
            word.push(s);
            dfs(steps, max_len, tol, acc.compose(&step.map), word, found);
            word.pop();
        }
    }
    dfs(&steps, max_len, tol, Isometry::IDENTITY, &mut word, &mut found);

    let canonical = |w: &[usize]| {
        let inv: Vec<usize> = w.iter().rev().map(|&s| steps[s].inverse_index).collect();
        let mut best = w.to_vec();
        for base in [w.to_vec(), inv] {
            for r in 0..base.len() {
                let mut rot = base.clone();
                rot.rotate_left(r);
                if rot < best {
                    best = rot;
                }
            }
        }
        best
    };
    let mut reps: Vec<Vec<usize>> = found
        .iter()
        // cyclically reduced only
        .filter(|w| w.len() < 2 || steps[w[0]].inverse_index != *w.last().unwrap())
        .map(|w| canonical(w))
        .collect();
    reps.sort_by(|a, b| a.len().cmp(&b.len()).then(a.cmp(b)));
    reps.dedup();
    reps.into_iter()
        .map(|w| Word(w.into_iter().map(|s| steps[s].letter).collect()))
        .collect()
}

/// Checks that `g` carries side `from` of the polygon onto side `to`, sampled
/// at `samples` points; returns the largest Euclidean offset from the target side.
pub fn side_mapping_error(
    polygon: &FundamentalPolygon,
    g: &Isometry,
    from: usize,
    to: usize,
    samples: usize,
) -> f64 {
    polygon
        .side_samples(from, samples)
        .into_iter()
        .map(|p| polygon.sides[to].euclidean_offset(g.apply(p).z()))
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hyperbolic::hyp_distance;

    fn bolza() -> GroupPreset {
        build_octagon_group(OctagonPairing::Bolza).unwrap()
    }

    fn gutzwiller() -> GroupPreset {
        build_octagon_group(OctagonPairing::Gutzwiller).unwrap()
    }

    #[test]
    fn triangle_relators_hold() {
        let g = build_triangle_group(4, 4, 4).unwrap();
        let report = verify_relators(&g.gens, 1e-9);
        assert_eq!(report.checks.len(), 6);
        assert!(report.pass(), "{report:?}");
    }

    #[test]
    fn hyperbolicity_boundary() {
        assert!(build_triangle_group(2, 3, 7).is_ok());
        assert!(matches!(build_triangle_group(2, 3, 6), Err(GroupError::NotHyperbolic { .. })));
        assert!(matches!(build_triangle_group(3, 3, 3), Err(GroupError::NotHyperbolic { .. })));
        assert!(matches!(build_triangle_group(1, 8, 8), Err(GroupError::DegenerateAngle { .. })));
    }

    #[test]
    fn equilateral_side_length() {
        let want = (1.0 + 2f64.sqrt()).acosh();
        assert!((want - 1.528571).abs() < 1e-6);
        let p = build_triangle_group(4, 4, 4).unwrap().polygon;
        for i in 0..3 {
            let d = hyp_distance(p.vertices[i], p.vertices[(i + 1) % 3]).unwrap();
            assert!((d - want).abs() < 1e-9, "side {i}: {d}");
        }
    }

    #[test]
    fn triangle_is_centred() {
        let p = build_triangle_group(3, 7, 2).unwrap().polygon;
        let c = karcher_mean(&p.vertices, 1e-14);
        assert!(c.z().norm() < 1e-10);
        assert!(p.vertices[0].im().abs() < 1e-12 && p.vertices[0].re() > 0.0);
    }

    #[test]
    fn triangle_angles_match() {
        for (k, l, m) in [(4, 4, 4), (2, 3, 7), (3, 5, 9), (10, 10, 10)] {
            let p = build_triangle_group(k, l, m).unwrap().polygon;
            let want = [PI / k as f64, PI / l as f64, PI / m as f64];
            for (got, want) in p.measured_angles().iter().zip(want) {
                assert!((got - want).abs() < 1e-9, "({k},{l},{m}): {got} vs {want}");
            }
        }
    }

    #[test]
    fn reflections_fix_their_sides() {
        let g = build_triangle_group(4, 5, 6).unwrap();
        // g1, g2, g3 reflect in sides 2, 0, 1
        for (gen, side) in g.gens.generators.iter().zip([2, 0, 1]) {
            assert!(side_mapping_error(&g.polygon, &gen.map, side, side, 20) < 1e-8);
            let other = (side + 1) % 3;
            assert!(side_mapping_error(&g.polygon, &gen.map, other, other, 20) > 1e-3);
        }
    }

    #[test]
    fn octagon_generators_pair_sides() {
        for pairing in [OctagonPairing::Bolza, OctagonPairing::Gutzwiller] {
            let g = build_octagon_group(pairing.clone()).unwrap();
            assert!(g.warnings.is_empty(), "{:?}", g.warnings);
            for (gen, (i, j)) in g.gens.generators.iter().zip(pairing.scheme().pairs()) {
                let err = side_mapping_error(&g.polygon, &gen.map, j, i, 20);
                assert!(err < 1e-8, "{pairing:?} side {j} -> {i}: {err}");
                // carries the octagon across side i: the centre lands outside
                let c = gen.map.apply(DiskPoint::ORIGIN);
                assert!(g.polygon.sides[i].euclidean_offset(c.z()) > 1e-3);
            }
        }
    }

    #[test]
    fn octagon_geometry() {
        let r = octagon_circumradius();
        assert!((r - (3.0 + 2.0 * 2f64.sqrt()).acosh()).abs() < 1e-12);
        let p = regular_octagon();
        for (got, want) in p.measured_angles().iter().zip(&p.angles) {
            assert!((got - PI / 4.0).abs() < 1e-9 && *want == PI / 4.0);
        }
    }

    #[test]
    fn bolza_first_generator_entries() {
        let g1 = bolza().gens.generators[0].map.renormalized();
        assert!((g1.a.norm() - (1.0 + 2f64.sqrt())).abs() < 1e-9);
        assert!((g1.b.norm() - (2.0 + 2.0 * 2f64.sqrt()).sqrt()).abs() < 1e-9);
        // translation along the real axis
        assert!((g1.b / g1.a).im.abs() < 1e-12);
    }

    #[test]
    fn octagon_displacements_agree() {
        let want = (5.0 + 4.0 * 2f64.sqrt()).acosh();
        for g in [bolza(), gutzwiller()] {
            for gen in &g.gens.generators {
                assert!((gen.map.displacement() - want).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn octagon_relators() {
        assert!(verify_relators(&bolza().gens, 1e-9).pass());
        assert!(verify_relators(&gutzwiller().gens, 1e-9).pass());
        let bolza_word: Word = BOLZA_RELATOR.parse().unwrap();
        let crossed = verify_words(&gutzwiller().gens, &[bolza_word], 1e-9);
        assert!(crossed.max_deviation() > 0.1);
        let empty = verify_words(&bolza().gens, &[Word::empty()], 1e-9);
        assert_eq!(empty.max_deviation(), 0.0);
    }

    #[test]
    fn gutzwiller_relator_is_found_by_search() {
        let found = find_relators(&gutzwiller().gens, 8, 1e-9);
        assert!(!found.is_empty());
        assert!(found.iter().all(|w| w.len() == 8));
        assert!(verify_words(&gutzwiller().gens, &found, 1e-9).pass());
    }

    #[test]
    fn bad_pairings() {
        assert!(PairingScheme::new(vec![1, 0, 2, 3, 5, 4, 7, 6]).is_err());
        assert!(PairingScheme::new(vec![1, 2, 0, 4, 5, 3, 7, 6]).is_err());
        // adjacent sides paired: a valid involution whose cycles do not tile
        let adjacent = PairingScheme::new(vec![1, 0, 3, 2, 5, 4, 7, 6]).unwrap();
        let g = build_octagon_group(OctagonPairing::Custom(adjacent)).unwrap();
        assert!(!g.warnings.is_empty());
    }

    #[test]
    fn closure_sizes() {
        assert_eq!(build_triangle_group(4, 4, 4).unwrap().gens.symmetric_closure().len(), 3);
        assert_eq!(bolza().gens.symmetric_closure().len(), 8);
        let mixed = GeneratorSet::new(
            vec![
                Generator {
                    label: "r".into(),
                    map: Isometry::diameter_reflection(0.2),
                    is_involution: true,
                },
                Generator {
                    label: "t".into(),
                    map: Isometry::translation(0.7, 1.0),
                    is_involution: false,
                },
            ],
            vec![],
        );
        let closure = mixed.symmetric_closure();
        assert_eq!(closure.len(), 3);
        assert!(closure[2].map.distance_to(&closure[1].map.inverse()) < 1e-12);
        for (i, s) in closure.iter().enumerate() {
            assert_eq!(closure[s.inverse_index].inverse_index, i);
        }
        let total: f64 = mixed.step_distribution().iter().sum();
        assert!((total - 1.0).abs() < 1e-15);
    }

    #[test]
    fn step_distribution_validation() {
        let gens = build_triangle_group(4, 4, 4).unwrap().gens;
        assert!(gens.clone().with_step_distribution(vec![0.5, 0.25, 0.25]).is_ok());
        assert!(gens.clone().with_step_distribution(vec![0.5, 0.5]).is_err());
        assert!(gens.with_step_distribution(vec![0.5, 0.6, -0.1]).is_err());
    }

    #[test]
    fn word_ball_counts() {
        let tri = build_triangle_group(4, 4, 4).unwrap().gens;
        assert_eq!(word_ball(&tri, 0, 10).unwrap().len(), 1);
        assert_eq!(word_ball(&tri, 2, 100).unwrap().len(), 13);
        let ball = word_ball(&bolza().gens, 2, 100).unwrap();
        assert_eq!(ball.len(), 73);
        assert!(ball.windows(2).all(|w| (w[0].0.len(), &w[0].0) < (w[1].0.len(), &w[1].0)));
        assert!(matches!(word_ball(&tri, 10, 1000), Err(GroupError::BudgetExceeded { .. })));
    }

    #[test]
    fn rotated_parameters_are_conjugate() {
        let multiset = |k, l, m| {
            let ball = word_ball(&build_triangle_group(k, l, m).unwrap().gens, 3, 1000).unwrap();
            let mut d: Vec<f64> = ball.iter().map(|(_, g)| g.displacement()).collect();
            d.sort_by(f64::total_cmp);
            d
        };
        for (k, l, m) in [(2, 3, 7), (4, 5, 6)] {
            let a = multiset(k, l, m);
            let b = multiset(l, m, k);
            let c = multiset(m, k, l);
            for ((x, y), z) in a.iter().zip(&b).zip(&c) {
                assert!((x - y).abs() < 1e-10 && (x - z).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn presets_and_words() {
        assert_eq!(preset("triangle: 3, 7, 2").unwrap().id, "triangle:3,7,2");
        assert_eq!(preset("bolza").unwrap().id, "bolza");
        for bad in ["triangle:4,4", "triangle:a,b,c", "klein", ""] {
            assert!(matches!(preset(bad), Err(GroupError::UnknownPreset(_))), "{bad}");
        }
        let w: Word = "g1 g2^-1 g3".parse().unwrap();
        assert_eq!(w.to_string(), "g1 g2^-1 g3");
        assert_eq!(w.inverse().to_string(), "g3^-1 g2 g1^-1");
        assert_eq!("e".parse::<Word>().unwrap(), Word::empty());
        for bad in ["g0", "h1", "g1^2", "g"] {
            assert!(bad.parse::<Word>().is_err(), "{bad}");
        }
    }
}
