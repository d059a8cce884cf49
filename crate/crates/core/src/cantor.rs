//! Dyadic words, the composed branch maps `Ψⁿ_w`, the pieces `Bⁿ_w`, the tip,
//! and samples of the critical Cantor set together with its invariant measure.
//!
//! Words are little-endian: the first letter selects the outermost branch
//! `ψ¹`, and the adding machine carries from the first letter to the last.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::funcrep::Box3;
use crate::henon::{HenonMap3D, RenormTower, STANDING_BOX};

/// Probe points per axis used to image the standing box.
pub const PROBES_PER_AXIS: usize = 8;

/// Longest word that fits the integer encoding.
pub const MAX_WORD_LEN: usize = 63;

/// One letter of a dyadic word: `v` is 0 and `c` is 1.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Letter {
    V,
    C,
}

impl Letter {
    pub fn bit(self) -> u64 {
        match self {
            Letter::V => 0,
            Letter::C => 1,
        }
    }

    pub fn from_bit(b: u64) -> Self {
        if b & 1 == 0 {
            Letter::V
        } else {
            Letter::C
        }
    }
}

/// A finite word over `{v, c}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Word {
    letters: Vec<Letter>,
}

impl Word {
    pub fn new(letters: Vec<Letter>) -> Result<Self> {
        if letters.len() > MAX_WORD_LEN {
            return Err(Error::Invalid(format!(
                "word length {} exceeds {MAX_WORD_LEN}",
                letters.len()
            )));
        }
        Ok(Self { letters })
    }

    pub fn empty() -> Self {
        Self {
            letters: Vec::new(),
        }
    }

    /// The word of length `len` whose value `Σ w_{k+1} 2^k` is `value mod 2^len`.
    pub fn from_value(value: u64, len: usize) -> Self {
        assert!(
            len <= MAX_WORD_LEN,
            "word length {len} exceeds {MAX_WORD_LEN}"
        );
        Self {
            letters: (0..len).map(|k| Letter::from_bit(value >> k)).collect(),
        }
    }

    /// `vⁿ` or `cⁿ`.
    pub fn repeated(letter: Letter, len: usize) -> Self {
        assert!(
            len <= MAX_WORD_LEN,
            "word length {len} exceeds {MAX_WORD_LEN}"
        );
        Self {
            letters: vec![letter; len],
        }
    }

    /// All `2ⁿ` words of length `n`, ordered by value.
    pub fn all(n: usize) -> Vec<Word> {
        (0..1u64 << n).map(|v| Word::from_value(v, n)).collect()
    }

    pub fn value(&self) -> u64 {
        self.letters
            .iter()
            .enumerate()
            .fold(0, |acc, (k, l)| acc | (l.bit() << k))
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }

    /// The word without its last letter, naming the parent piece.
    pub fn parent(&self) -> Word {
        let mut letters = self.letters.clone();
        letters.pop();
        Word { letters }
    }

    /// The first `m` letters.
    pub fn prefix(&self, m: usize) -> Word {
        Word {
            letters: self.letters[..m.min(self.len())].to_vec(),
        }
    }

    pub fn push(&self, letter: Letter) -> Result<Word> {
        let mut letters = self.letters.clone();
        letters.push(letter);
        Word::new(letters)
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for l in &self.letters {
            f.write_str(match l {
                Letter::V => "v",
                Letter::C => "c",
            })?;
        }
        Ok(())
    }
}

impl FromStr for Word {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let letters = s
            .chars()
            .map(|ch| match ch {
                'v' | '0' => Ok(Letter::V),
                'c' | '1' => Ok(Letter::C),
                other => Err(Error::Invalid(format!("letter {other:?} is not v or c"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Word::new(letters)
    }
}

/// Dyadic `+1` with carry, modulo `2ⁿ`.
pub fn adding_machine(w: &Word) -> Word {
    let mut letters = w.letters.clone();
    for l in letters.iter_mut() {
        match l {
            Letter::V => {
                *l = Letter::C;
                break;
            }
            Letter::C => *l = Letter::V,
        }
    }
    Word { letters }
}

fn check_depth(tower: &RenormTower, n: usize) -> Result<()> {
    if tower.depth() < n {
        return Err(Error::TowerTooShallow {
            needed: n,
            have: tower.depth(),
        });
    }
    Ok(())
}

/// `ψᵏ_letter`, the branch from the coordinates of `F_k` to those of `F_{k-1}`.
fn branch(tower: &RenormTower, k: usize, letter: Letter, u: [f64; 3]) -> Result<[f64; 3]> {
    let step = &tower.steps[k - 1];
    match letter {
        Letter::V => step.psi_v(u),
        Letter::C => step.psi_c(u),
    }
}

/// `Ψⁿ_w(u) = ψ¹_{w₁} ∘ ⋯ ∘ ψⁿ_{wₙ}(u)` with `n = |w|`.
pub fn psi_word(tower: &RenormTower, w: &Word, u: [f64; 3]) -> Result<[f64; 3]> {
    check_depth(tower, w.len())?;
    let mut p = u;
    for (k, &l) in w.letters.iter().enumerate().rev() {
        p = branch(tower, k + 1, l, p)?;
    }
    Ok(p)
}

/// `DΨⁿ_w(u)` by central differences with step `h`.
pub fn psi_word_jacobian(
    tower: &RenormTower,
    w: &Word,
    u: [f64; 3],
    h: f64,
) -> Result<nalgebra::Matrix3<f64>> {
    let mut m = nalgebra::Matrix3::zeros();
    for j in 0..3 {
        let mut up = u;
        let mut dn = u;
        up[j] += h;
        dn[j] -= h;
        let a = psi_word(tower, w, up)?;
        let b = psi_word(tower, w, dn)?;
        for i in 0..3 {
            m[(i, j)] = (a[i] - b[i]) / (2.0 * h);
        }
    }
    Ok(m)
}

/// Approximate tips `τ_n` of every map of the tower, as points in the
/// standing box. The deepest one is the fixed point of the last `ψ_v`; the
/// others are its images, since `τ_{n-1} = ψⁿ_v(τ_n)`.
pub fn tip_seeds(tower: &RenormTower) -> Result<Vec<[f64; 3]>> {
    let depth = tower.depth();
    if depth == 0 {
        return Err(Error::TowerTooShallow { needed: 1, have: 0 });
    }
    let last = &tower.steps[depth - 1];
    let mut p = STANDING_BOX.center();
    let mut converged = false;
    for _ in 0..200 {
        let q = last.psi_v(p)?;
        let change = (0..3).map(|a| (q[a] - p[a]).abs()).fold(0.0, f64::max);
        p = q;
        if change < 1e-15 {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NoConvergence {
            iterations: 200,
            residual: f64::NAN,
        });
    }
    let mut seeds = vec![p; depth + 1];
    for n in (0..depth).rev() {
        seeds[n] = tower.steps[n].psi_v(seeds[n + 1])?;
    }
    Ok(seeds)
}

/// A piece `Bⁿ_w = Ψⁿ_w(B)` of level `n = |w|`.
#[derive(Clone, Debug)]
pub struct Piece {
    pub word: Word,
    /// Bounding box of the probe images.
    pub hull: Box3,
    /// Diagonal of the hull.
    pub diameter: f64,
    /// `Ψⁿ_w(τ_n)`, the point of the Cantor set coded by `w v v …`.
    pub sample: [f64; 3],
    /// Images of the probe grid of the standing box.
    pub probes: Vec<[f64; 3]>,
}

impl Piece {
    pub fn level(&self) -> usize {
        self.word.len()
    }
}

/// Images of `points` (in the coordinates of `F_n`) under every `Ψⁿ_w`,
/// ordered by word value. Compositions share their inner branches.
fn image_all(
    tower: &RenormTower,
    n: usize,
    points: Vec<[f64; 3]>,
) -> Result<Vec<(Word, Vec<[f64; 3]>)>> {
    check_depth(tower, n)?;
    let mut sets = vec![(Vec::<Letter>::new(), points)];
    for k in (1..=n).rev() {
        sets = sets
            .into_par_iter()
            .flat_map_iter(|(suffix, pts)| {
                [Letter::V, Letter::C].into_iter().map(move |l| {
                    let image = pts
                        .iter()
                        .map(|&p| branch(tower, k, l, p))
                        .collect::<Result<Vec<_>>>()?;
                    let mut letters = Vec::with_capacity(suffix.len() + 1);
                    letters.push(l);
                    letters.extend_from_slice(&suffix);
                    Ok((letters, image))
                })
            })
            .collect::<Result<Vec<_>>>()?;
    }
    let mut out: Vec<(Word, Vec<[f64; 3]>)> = sets
        .into_iter()
        .map(|(letters, pts)| (Word { letters }, pts))
        .collect();
    out.sort_by_key(|(w, _)| w.value());
    Ok(out)
}

/// All `2ⁿ` pieces of level `n`, ordered by word value.
pub fn build_pieces(tower: &RenormTower, n: usize) -> Result<Vec<Piece>> {
    check_depth(tower, n)?;
    let tau_n = tip_seeds(tower)?[n];
    let mut grid = STANDING_BOX.grid(PROBES_PER_AXIS);
    grid.push(tau_n);
    image_all(tower, n, grid)?
        .into_iter()
        .map(|(word, mut probes)| {
            let sample = probes.pop().expect("tip probe appended");
            let hull = Box3::enclosing(&probes)?;
            Ok(Piece {
                word,
                diameter: hull.diagonal(),
                hull,
                sample,
                probes,
            })
        })
        .collect()
}

/// One Cantor-set sample per level-`n` piece, ordered by word value. Equal
/// weights make these a quadrature rule for the invariant measure.
pub fn level_samples(tower: &RenormTower, n: usize) -> Result<Vec<[f64; 3]>> {
    check_depth(tower, n)?;
    let tau = tip_seeds(tower)?;
    Ok(image_all(tower, n, vec![tau[n]])?
        .into_iter()
        .map(|(_, p)| p[0])
        .collect())
}

/// Largest amount by which the hull of a child piece leaves the hull of its
/// parent (zero when every child is nested).
pub fn nesting_excess(parents: &[Piece], children: &[Piece]) -> f64 {
    children
        .iter()
        .map(|ch| {
            let parent = &parents[ch.word.parent().value() as usize];
            (0..3)
                .map(|a| {
                    let p = parent.hull.axes[a];
                    let c = ch.hull.axes[a];
                    (p.lo - c.lo).max(c.hi - p.hi).max(0.0)
                })
                .fold(0.0, f64::max)
        })
        .fold(0.0, f64::max)
}

/// Separation of two boxes along the best axis; positive iff disjoint.
pub fn hull_gap(a: &Box3, b: &Box3) -> f64 {
    (0..3)
        .map(|k| (b.axes[k].lo - a.axes[k].hi).max(a.axes[k].lo - b.axes[k].hi))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Smallest pairwise hull gap among `pieces`, with the pair attaining it.
pub fn min_hull_gap(pieces: &[Piece]) -> (f64, usize, usize) {
    let mut best = (f64::INFINITY, 0, 0);
    for i in 0..pieces.len() {
        for j in i + 1..pieces.len() {
            let g = hull_gap(&pieces[i].hull, &pieces[j].hull);
            if g < best.0 {
                best = (g, i, j);
            }
        }
    }
    best
}

/// Hausdorff distance of two boxes in the max norm.
pub fn box_distance(a: &Box3, b: &Box3) -> f64 {
    (0..3)
        .map(|k| {
            (a.axes[k].lo - b.axes[k].lo)
                .abs()
                .max((a.axes[k].hi - b.axes[k].hi).abs())
        })
        .fold(0.0, f64::max)
}

/// How far `F(Bⁿ_w)` is from `Bⁿ_{P(w)}`, relative to the diameter of the
/// target piece. For `P(w) = vⁿ` only containment is measured.
#[derive(Clone, Debug, Serialize)]
pub struct PermutationReport {
    pub level: usize,
    /// Worst ratio over the equality cases.
    #[serde(serialize_with = "crate::io::ser_f64")]
    pub worst_ratio: f64,
    pub worst_word: String,
    /// Ratio for the containment case `w = cⁿ`.
    #[serde(serialize_with = "crate::io::ser_f64")]
    pub containment_ratio: f64,
}

impl PermutationReport {
    pub fn holds(&self) -> bool {
        self.worst_ratio <= 1.0 && self.containment_ratio <= 1.0
    }
}

/// Checks `F(Bⁿ_w) = Bⁿ_{P(w)}` on the probe images of the pieces of one
/// level, where `map` is the base map of the tower.
pub fn permutation_check(map: &HenonMap3D, pieces: &[Piece]) -> Result<PermutationReport> {
    let level = pieces.first().map(Piece::level).unwrap_or(0);
    let mut report = PermutationReport {
        level,
        worst_ratio: 0.0,
        worst_word: String::new(),
        containment_ratio: 0.0,
    };
    for piece in pieces {
        let image: Vec<[f64; 3]> = piece.probes.iter().map(|&p| map.apply(p)).collect();
        let target = &pieces[adding_machine(&piece.word).value() as usize];
        if target.word.value() == 0 {
            let excess = image
                .iter()
                .map(|&p| target.hull.distance(p))
                .fold(0.0, f64::max);
            report.containment_ratio = excess / target.diameter;
        } else {
            let ratio = box_distance(&Box3::enclosing(&image)?, &target.hull) / target.diameter;
            if ratio >= report.worst_ratio {
                report.worst_ratio = ratio;
                report.worst_word = piece.word.to_string();
            }
        }
    }
    Ok(report)
}

pub fn max_diameter(pieces: &[Piece]) -> f64 {
    pieces.iter().map(|p| p.diameter).fold(0.0, f64::max)
}

/// The tip `τ_F = ∩ Bⁿ_{vⁿ}` with its error bar.
#[derive(Clone, Debug, Serialize)]
pub struct Tip {
    #[serde(serialize_with = "crate::io::ser_arr3")]
    pub point: [f64; 3],
    /// Diameter of the deepest `vⁿ` piece, which contains the tip.
    #[serde(serialize_with = "crate::io::ser_f64")]
    pub error: f64,
    pub level: usize,
}

/// The tip of the base map: the sample of the first `vⁿ` piece whose diameter
/// is below `tol`.
pub fn tip(tower: &RenormTower, tol: f64) -> Result<Tip> {
    let seeds = tip_seeds(tower)?;
    let grid = STANDING_BOX.grid(PROBES_PER_AXIS);
    for n in 1..=tower.depth() {
        let w = Word::repeated(Letter::V, n);
        let probes = grid
            .iter()
            .map(|&u| psi_word(tower, &w, u))
            .collect::<Result<Vec<_>>>()?;
        let diameter = Box3::enclosing(&probes)?.diagonal();
        if diameter < tol {
            return Ok(Tip {
                point: psi_word(tower, &w, seeds[n])?,
                error: diameter,
                level: n,
            });
        }
    }
    Err(Error::TowerTooShallow {
        needed: tower.depth() + 1,
        have: tower.depth(),
    })
}

/// A point of the critical Cantor set, coded by a truncated word.
#[derive(Clone, Debug, Serialize)]
pub struct CantorSample {
    pub word: String,
    #[serde(serialize_with = "crate::io::ser_arr3")]
    pub point: [f64; 3],
    pub level: usize,
    /// Diameter of the level-`n` piece, the truncation error of `point`.
    #[serde(serialize_with = "crate::io::ser_f64")]
    pub diameter: f64,
}

/// The orbit `h(w0), h(w0 + 1), …` of the adding machine, realized as points
/// of the Cantor set through piece lookup at level `|w0|`.
pub fn cantor_orbit(tower: &RenormTower, w0: &Word, steps: usize) -> Result<Vec<CantorSample>> {
    let n = w0.len();
    let pieces = build_pieces(tower, n)?;
    let mut w = w0.clone();
    let mut out = Vec::with_capacity(steps);
    for _ in 0..steps {
        let piece = &pieces[w.value() as usize];
        out.push(CantorSample {
            word: w.to_string(),
            point: piece.sample,
            level: n,
            diameter: piece.diameter,
        });
        w = adding_machine(&w);
    }
    Ok(out)
}

/// `‖F^k(h(w0)) − h(w0 + k)‖` for `k < samples.len()`, iterating the base map.
pub fn direct_iteration_gaps(map: &HenonMap3D, samples: &[CantorSample]) -> Vec<f64> {
    let Some(first) = samples.first() else {
        return Vec::new();
    };
    let mut p = first.point;
    samples
        .iter()
        .map(|s| {
            let d = (0..3)
                .map(|a| (p[a] - s.point[a]).powi(2))
                .sum::<f64>()
                .sqrt();
            p = map.apply(p);
            d
        })
        .collect()
}

/// Fraction of the samples lying in the hull of `piece`.
pub fn occupancy(samples: &[CantorSample], piece: &Piece) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    let hits = samples
        .iter()
        .filter(|s| piece.hull.contains(s.point))
        .count();
    hits as f64 / samples.len() as f64
}

/// CSV of pieces: word, level, hull corners and diameter.
pub fn pieces_csv(pieces: &[Piece]) -> String {
    use crate::io::fmt17;
    let rows: Vec<Vec<String>> = pieces
        .iter()
        .map(|p| {
            let h = &p.hull.axes;
            vec![
                p.word.to_string(),
                p.level().to_string(),
                fmt17(h[0].lo),
                fmt17(h[1].lo),
                fmt17(h[2].lo),
                fmt17(h[0].hi),
                fmt17(h[1].hi),
                fmt17(h[2].hi),
                fmt17(p.diameter),
            ]
        })
        .collect();
    crate::io::csv_records(
        &[
            "word", "level", "x_lo", "y_lo", "z_lo", "x_hi", "y_hi", "z_hi", "diameter",
        ],
        &rows,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::henon::RenormTower;
    use crate::testkit::{fixed_point, fstar_tower, toy_tower};
    use proptest::prelude::*;

    #[test]
    fn toy_pieces_are_nested_disjoint_and_permuted() {
        let tower = toy_tower();
        let mut parents = build_pieces(tower, 0).unwrap();
        for n in 1..=5 {
            let pieces = build_pieces(tower, n).unwrap();
            assert_eq!(pieces.len(), 1 << n);
            assert!(nesting_excess(&parents, &pieces) <= 1e-9, "level {n}");
            let (gap, i, j) = min_hull_gap(&pieces);
            assert!(
                gap > 0.0,
                "level {n}: {} and {} overlap",
                pieces[i].word,
                pieces[j].word
            );
            let perm = permutation_check(&tower.maps[0], &pieces).unwrap();
            assert!(perm.holds(), "{perm:?}");
            for p in &pieces {
                assert!(p.hull.contains(p.sample));
            }
            parents = pieces;
        }
    }

    #[test]
    fn toy_diameters_shrink_by_sigma() {
        let tower = toy_tower();
        let sigma = fixed_point().sigma;
        let diams: Vec<f64> = (2..=6)
            .map(|n| max_diameter(&build_pieces(tower, n).unwrap()))
            .collect();
        for w in diams.windows(2) {
            let ratio = w[1] / w[0];
            assert!(ratio <= 1.2 * sigma, "{ratio} vs sigma {sigma}");
        }
    }

    #[test]
    fn degenerate_piece_c_lies_on_graph() {
        let tower = fstar_tower();
        let f = &fixed_point().map.f;
        let pieces = build_pieces(tower, 1).unwrap();
        let pc = &pieces[1];
        assert_eq!(pc.word.to_string(), "c");
        for p in &pc.probes {
            assert!((p[0] - f.eval(p[1])).abs() < 1e-8, "{p:?}");
        }
    }

    #[test]
    fn degenerate_tip_is_critical_value() {
        let tower = fstar_tower();
        let fp = fixed_point();
        let t = tip(tower, 0.1).unwrap();
        let expect = [fp.map.eval(fp.map.c), fp.map.c, 0.0];
        let d = (0..3)
            .map(|a| (t.point[a] - expect[a]).powi(2))
            .sum::<f64>()
            .sqrt();
        assert!(d <= t.error, "{t:?} vs {expect:?}");
        // The tip seed is the fixed point of the branch itself.
        assert!(d < 1e-8, "{d}");
    }

    #[test]
    fn tips_are_consistent_across_levels() {
        let tower = toy_tower();
        let shifted = RenormTower {
            maps: tower.maps[1..].to_vec(),
            steps: tower.steps[1..].to_vec(),
        };
        let t0 = tip(tower, 5e-2).unwrap();
        let t1 = tip(&shifted, 5e-2).unwrap();
        let back = tower.steps[0].psi_v(t1.point).unwrap();
        let d = (0..3)
            .map(|a| (back[a] - t0.point[a]).powi(2))
            .sum::<f64>()
            .sqrt();
        assert!(d <= t0.error, "{d} > {}", t0.error);
        let b1v = &build_pieces(tower, 1).unwrap()[0];
        assert!(b1v.hull.contains(t0.point));
    }

    #[test]
    fn orbit_follows_adding_machine() {
        let tower = toy_tower();
        let w0 = Word::repeated(Letter::V, 6);
        let orbit = cantor_orbit(tower, &w0, 256).unwrap();
        assert_eq!(orbit[1].word, "cvvvvv");
        let gaps = direct_iteration_gaps(&tower.maps[0], &orbit[..65]);
        for (k, g) in gaps.iter().enumerate() {
            assert!(
                *g <= orbit[k].diameter.max(orbit[0].diameter),
                "k = {k}: {g}"
            );
        }
    }

    #[test]
    fn orbit_equidistributes_over_pieces() {
        let tower = toy_tower();
        let steps = 1024;
        let orbit = cantor_orbit(tower, &Word::from_value(37, 6), steps).unwrap();
        for m in 1..=4 {
            let pieces = build_pieces(tower, m).unwrap();
            for p in &pieces {
                let frac = occupancy(&orbit, p);
                let expect = 0.5f64.powi(m as i32);
                assert!(
                    (frac - expect).abs() <= 2.0 / (steps as f64).sqrt(),
                    "{} {frac}",
                    p.word
                );
            }
        }
    }

    #[test]
    fn samples_match_pieces_and_csv_has_one_row_per_piece() {
        let tower = toy_tower();
        let pieces = build_pieces(tower, 3).unwrap();
        let samples = level_samples(tower, 3).unwrap();
        for (p, s) in pieces.iter().zip(&samples) {
            assert_eq!(p.sample, *s);
        }
        let csv = pieces_csv(&pieces);
        assert_eq!(csv.lines().count(), 9);
        assert!(csv.starts_with("word,level,"));
    }

    #[test]
    fn shallow_tower_is_reported() {
        let err = build_pieces(toy_tower(), 9).unwrap_err();
        assert_eq!(err, Error::TowerTooShallow { needed: 9, have: 6 });
    }

    #[test]
    fn adding_machine_examples() {
        let p = |s: &str| adding_machine(&s.parse().unwrap()).to_string();
        assert_eq!(p("vv"), "cv");
        assert_eq!(p("cc"), "vv");
        assert_eq!(p("cvc"), "vcc");
    }

    #[test]
    fn word_round_trip() {
        let w: Word = "cvc".parse().unwrap();
        assert_eq!(w.value(), 5);
        assert_eq!(Word::from_value(5, 3), w);
        assert_eq!(w.parent().to_string(), "cv");
        assert!("cxv".parse::<Word>().is_err());
    }

    proptest! {
        #[test]
        fn adding_machine_adds_one(n in 1usize..12, v in any::<u64>()) {
            let w = Word::from_value(v, n);
            let m = (1u64 << n) - 1;
            prop_assert_eq!(adding_machine(&w).value(), (w.value() + 1) & m);
        }

        #[test]
        fn adding_machine_has_order_two_to_the_n(n in 1usize..10, v in any::<u64>()) {
            let w0 = Word::from_value(v, n);
            let mut w = w0.clone();
            for k in 1..=(1u64 << n) {
                w = adding_machine(&w);
                if k < 1u64 << n {
                    prop_assert_ne!(&w, &w0);
                }
            }
            prop_assert_eq!(w, w0);
        }
    }
}
