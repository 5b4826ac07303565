//! Finitely generated groups of Möbius maps: reduced words, breadth-first
//! word balls with projective deduplication, and locating which group
//! translate of a fundamental domain contains a point.

use std::cmp::Ordering;
use std::collections::HashMap;

use num_complex::Complex64;

use crate::domain::FundamentalDomain;
use crate::error::{Error, Result};
use crate::moebius::{ExtendedPoint, MoebiusMap};
use crate::quaternion::HPoint;

/// A generating set together with side labels, one label per generator and
/// one per inverse.
#[derive(Clone, Debug)]
pub struct GroupPresentation {
    generators: Vec<MoebiusMap>,
    inverses: Vec<MoebiusMap>,
    labels: Vec<String>,
}

impl GroupPresentation {
    /// `labels` holds `2k` unique names ordered `g0, g0^-1, g1, g1^-1, ...`.
    pub fn new(generators: Vec<MoebiusMap>, labels: Vec<String>) -> Result<Self> {
        if labels.len() != 2 * generators.len() {
            return Err(Error::Invalid(format!(
                "expected {} labels for {} generators, got {}",
                2 * generators.len(),
                generators.len(),
                labels.len()
            )));
        }
        for (i, l) in labels.iter().enumerate() {
            if labels[..i].contains(l) {
                return Err(Error::Invalid(format!("duplicate side label {l:?}")));
            }
        }
        let mut inverses = Vec::with_capacity(generators.len());
        for g in &generators {
            inverses.push(g.matrix_inverse()?);
        }
        Ok(GroupPresentation { generators, inverses, labels })
    }

    /// Labels generator `i` as `g<i>` and its inverse as `g<i>'`.
    pub fn with_default_labels(generators: Vec<MoebiusMap>) -> Result<Self> {
        let labels = (0..generators.len())
            .flat_map(|i| [format!("g{i}"), format!("g{i}'")])
            .collect();
        GroupPresentation::new(generators, labels)
    }

    pub fn generator_count(&self) -> usize {
        self.generators.len()
    }

    pub fn generator(&self, i: usize) -> &MoebiusMap {
        &self.generators[i]
    }

    /// The stored matrix for a letter: the generator itself, or its true
    /// matrix inverse for exponent -1.
    pub fn letter_matrix(&self, l: Letter) -> &MoebiusMap {
        if l.exponent > 0 {
            &self.generators[l.index]
        } else {
            &self.inverses[l.index]
        }
    }

    pub fn label(&self, l: Letter) -> &str {
        &self.labels[2 * l.index + usize::from(l.exponent < 0)]
    }

    /// Looks a letter up by its side label.
    pub fn letter_by_label(&self, label: &str) -> Option<Letter> {
        let i = self.labels.iter().position(|l| l == label)?;
        Some(Letter { index: i / 2, exponent: if i % 2 == 0 { 1 } else { -1 } })
    }

    /// All `2k` letters in canonical rank order.
    pub fn letters(&self) -> impl Iterator<Item = Letter> + '_ {
        (0..self.generators.len())
            .flat_map(|index| [Letter { index, exponent: 1 }, Letter { index, exponent: -1 }])
    }
}

/// One letter of a word: a generator index and an exponent of plus or minus
/// one.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Letter {
    pub index: usize,
    pub exponent: i8,
}

impl Letter {
    pub fn new(index: usize, exponent: i8) -> Result<Self> {
        if exponent != 1 && exponent != -1 {
            return Err(Error::Invalid(format!("letter exponent must be +-1, got {exponent}")));
        }
        Ok(Letter { index, exponent })
    }

    pub fn inverse(&self) -> Letter {
        Letter { index: self.index, exponent: -self.exponent }
    }

    fn cancels(&self, other: &Letter) -> bool {
        self.index == other.index && self.exponent == -other.exponent
    }

    fn rank(&self) -> usize {
        2 * self.index + usize::from(self.exponent < 0)
    }
}

impl Ord for Letter {
    fn cmp(&self, other: &Self) -> Ordering {
        self.rank().cmp(&other.rank())
    }
}

impl PartialOrd for Letter {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// A reduced word in the generators: no letter is adjacent to its own
/// inverse. Words order by length first, then lexicographically by letter
/// rank, which is the canonical enumeration order everywhere in this crate.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct GroupWord {
    letters: Vec<Letter>,
}

impl GroupWord {
    pub fn identity() -> Self {
        GroupWord { letters: Vec::new() }
    }

    pub fn from_letters(letters: Vec<Letter>) -> Result<Self> {
        for pair in letters.windows(2) {
            if pair[0].cancels(&pair[1]) {
                return Err(Error::Invalid(format!(
                    "word is not reduced at generator {}",
                    pair[0].index
                )));
            }
        }
        Ok(GroupWord { letters })
    }

    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    /// Appends a letter on the right; `None` if it would cancel.
    pub fn extended(&self, l: Letter) -> Option<GroupWord> {
        if let Some(last) = self.letters.last() {
            if last.cancels(&l) {
                return None;
            }
        }
        let mut letters = self.letters.clone();
        letters.push(l);
        Some(GroupWord { letters })
    }

    /// Appends a letter, cancelling it against the last letter when the two
    /// are mutually inverse, so concatenation tracks group elements.
    pub fn appended_reduced(&self, l: Letter) -> GroupWord {
        let mut letters = self.letters.clone();
        if letters.last().is_some_and(|last| last.cancels(&l)) {
            letters.pop();
        } else {
            letters.push(l);
        }
        GroupWord { letters }
    }

    pub fn inverse(&self) -> GroupWord {
        GroupWord { letters: self.letters.iter().rev().map(Letter::inverse).collect() }
    }

    /// The product of the letter matrices, left to right.
    pub fn matrix(&self, g: &GroupPresentation) -> MoebiusMap {
        let mut m = MoebiusMap::identity();
        for l in &self.letters {
            m = m.compose(g.letter_matrix(*l));
        }
        m
    }

    /// Dot-joined letter labels; the identity renders as `e`.
    pub fn label(&self, g: &GroupPresentation) -> String {
        if self.letters.is_empty() {
            return "e".to_string();
        }
        self.letters.iter().map(|l| g.label(*l)).collect::<Vec<_>>().join(".")
    }
}

impl Ord for GroupWord {
    fn cmp(&self, other: &Self) -> Ordering {
        self.letters
            .len()
            .cmp(&other.letters.len())
            .then_with(|| self.letters.cmp(&other.letters))
    }
}

impl std::fmt::Display for GroupWord {
    /// Presentation-free rendering: `e`, `g0`, `g2'.g0` and so on.
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.letters.is_empty() {
            return write!(f, "e");
        }
        for (i, l) in self.letters.iter().enumerate() {
            if i > 0 {
                write!(f, ".")?;
            }
            write!(f, "g{}{}", l.index, if l.exponent < 0 { "'" } else { "" })?;
        }
        Ok(())
    }
}

impl PartialOrd for GroupWord {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// A word together with its composed matrix.
#[derive(Clone, Debug)]
pub struct BallEntry {
    pub word: GroupWord,
    pub matrix: MoebiusMap,
}

/// All reduced words of length at most `radius`, one entry per projective
/// matrix class, in canonical order. Contains the identity, and every prefix
/// of a stored word is stored.
#[derive(Clone, Debug)]
pub struct WordBall {
    entries: Vec<BallEntry>,
    radius: usize,
}

impl WordBall {
    pub fn entries(&self) -> &[BallEntry] {
        &self.entries
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains_word(&self, w: &GroupWord) -> bool {
        self.entries.iter().any(|e| &e.word == w)
    }
}

/// Matches matrices that agree up to a nonzero complex scalar, within an
/// absolute tolerance on the det-1 normalization. Candidates are bucketed by
/// Frobenius norm so lookups stay local.
struct ProjectiveDedup {
    buckets: HashMap<i64, Vec<[Complex64; 4]>>,
    tol: f64,
    bucket_width: f64,
}

impl ProjectiveDedup {
    fn new(tol: f64) -> Self {
        ProjectiveDedup { buckets: HashMap::new(), tol, bucket_width: 1e-6 }
    }

    /// Det-1 normalization with the sign fixed so the first entry of
    /// magnitude above 1e-12 has argument in `[0, pi)`.
    fn canonical(m: &MoebiusMap) -> Result<[Complex64; 4]> {
        let n = m.normalize()?;
        let mut e = [n.a, n.b, n.c, n.d];
        let lead = e
            .iter()
            .find(|z| z.norm() > 1e-12)
            .copied()
            .ok_or(Error::SingularMatrix { det_norm: 0.0 })?;
        let arg = lead.arg();
        if !(0.0..std::f64::consts::PI).contains(&arg) {
            for z in &mut e {
                *z = -*z;
            }
        }
        Ok(e)
    }

    fn frobenius(e: &[Complex64; 4]) -> f64 {
        e.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Equality up to sign, entrywise within `tol`.
    fn matches(&self, x: &[Complex64; 4], y: &[Complex64; 4]) -> bool {
        let close = |s: f64| x.iter().zip(y.iter()).all(|(a, b)| (a - b * s).norm() <= self.tol);
        close(1.0) || close(-1.0)
    }

    /// Returns true (and records the matrix) when no stored matrix matches
    /// projectively.
    fn insert_if_new(&mut self, m: &MoebiusMap) -> Result<bool> {
        let e = ProjectiveDedup::canonical(m)?;
        let f = ProjectiveDedup::frobenius(&e);
        let q = (f / self.bucket_width).floor() as i64;
        for b in [q - 1, q, q + 1] {
            if let Some(v) = self.buckets.get(&b) {
                if v.iter().any(|old| self.matches(old, &e)) {
                    return Ok(false);
                }
            }
        }
        self.buckets.entry(q).or_default().push(e);
        Ok(true)
    }
}

/// Breadth-first enumeration of all reduced words of length at most `n`.
/// Words whose matrices coincide up to a scalar merge into the first one
/// generated, which by the traversal order is the shortest and, within a
/// length, the canonically smallest.
pub fn enumerate_ball(g: &GroupPresentation, n: usize) -> WordBall {
    let mut entries =
        vec![BallEntry { word: GroupWord::identity(), matrix: MoebiusMap::identity() }];
    let mut dedup = ProjectiveDedup::new(1e-9);
    dedup
        .insert_if_new(&MoebiusMap::identity())
        .expect("identity matrix normalizes");

    let mut layer_start = 0;
    for _ in 1..=n {
        let layer_end = entries.len();
        for i in layer_start..layer_end {
            let parent = entries[i].clone();
            for l in g.letters() {
                let Some(word) = parent.word.extended(l) else { continue };
                let matrix = parent.matrix.compose(g.letter_matrix(l));
                match dedup.insert_if_new(&matrix) {
                    Ok(true) => entries.push(BallEntry { word, matrix }),
                    Ok(false) => {}
                    // a singular product cannot arise from invertible
                    // generators; skip defensively
                    Err(_) => {}
                }
            }
        }
        if entries.len() == layer_end {
            break;
        }
        layer_start = layer_end;
    }
    WordBall { entries, radius: n }
}

/// Finds the first ball entry `w` (in canonical order) whose inverse maps
/// `p` into the closure of the domain, returning that word and the preimage.
pub fn locate(
    p: HPoint,
    domain: &FundamentalDomain,
    ball: &WordBall,
) -> Result<(GroupWord, HPoint)> {
    if !p.is_interior() {
        return Err(Error::Invalid(format!("locate needs an interior point, got r = {}", p.r)));
    }
    for entry in ball.entries() {
        let inv = match entry.matrix.matrix_inverse() {
            Ok(m) => m,
            Err(_) => continue,
        };
        if let ExtendedPoint::Finite(q) = inv.apply(ExtendedPoint::Finite(p)) {
            if q.r >= 0.0 && domain.contains_closure(q.coords()) {
                return Ok((entry.word.clone(), q));
            }
        }
    }
    Err(Error::LocateFailed { x: p.x, y: p.y, r: p.r })
}
