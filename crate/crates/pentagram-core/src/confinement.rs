//! Singularity analysis for iterated pentagram maps.
//!
//! The k-th power of the pentagram map has closed-form coordinate and
//! parameter formulas whose denominators are products of the level
//! polynomials from [`crate::fpoly`].  This module evaluates those formulas,
//! classifies singularity types of polygons, predicts when and where a
//! singularity is confined, builds the knight-move permutation matrices
//! behind the restriction arguments, and checks the worst-case vanishing
//! behaviour on odd cycles.

use crate::fpoly::{array_value, asm_enumerate_avoiding, Asm, AsmContext, YPoly};
use crate::polygon::{format_index, XCoords, YParams};
use crate::projective::{RandomSource, MAX_RANDOM_RETRIES};
use crate::scalar::{Field, RatFunc, Rational, ScalarError};
use num_traits::{One, Zero};
use std::collections::{BTreeSet, HashMap};
use std::fmt;
use thiserror::Error;

/// Errors from iteration formulas, type parsing, and confinement analysis.
#[derive(Debug, Error)]
pub enum ConfinementError {
    /// A denominator polynomial of the step-`k` formulas vanishes.
    #[error("singular at step {k}: the level {level} polynomial at index {j} vanishes")]
    SingularAtStep { k: i64, j: i64, level: i64 },
    /// The value recurrence divides by a vanishing lower-level value; the
    /// requested value exists but needs resolution by deformation.
    #[error("value at index {j} blocked by a vanishing level {level} value")]
    IndeterminateValue { j: i64, level: i64 },
    /// No knight path exists at this size and diagonal offset.
    #[error("no knight path of size {k} at offset {l}")]
    OffsetOutOfRange { k: i64, l: i64 },
    /// The confinement theorem hypotheses exclude this progression size.
    #[error("out of theorem range: a size {m} progression needs at least {required} vertices")]
    OutOfTheoremRange { m: i64, required: i64 },
    /// A singularity type string or member set is malformed.
    #[error("invalid singularity type: {0}")]
    InvalidType(String),
    /// No generic deformation direction was found within the retry budget.
    #[error("resolution by deformation failed to find a generic direction")]
    ResolutionFailed,
    /// An exact-arithmetic failure below the formulas.
    #[error(transparent)]
    Scalar(#[from] ScalarError),
}

// ---------------------------------------------------------------------------
// Value recurrence for the level polynomials.
// ---------------------------------------------------------------------------

/// The value of the monomial `M_{j,k}`: the product of `y_{3i+j}` for `i`
/// from `-k` to `k`.  Empty (hence one) for negative `k`.
fn m_value<F: Field>(y: &YParams<F>, j: i64, k: i64) -> F {
    (-k..=k).fold(F::one(), |acc, i| acc * y.get(3 * i + j).clone())
}

fn value_rec<F: Field>(
    y: &YParams<F>,
    memo: &mut HashMap<(i64, i64), F>,
    j: i64,
    k: i64,
) -> Result<F, ConfinementError> {
    if k <= 0 {
        return Ok(F::one());
    }
    let two_n = y.two_n() as i64;
    let j = j.rem_euclid(two_n);
    if k == 1 {
        return Ok(F::one() + y.get(j).clone());
    }
    if let Some(hit) = memo.get(&(j, k)) {
        return Ok(hit.clone());
    }
    let a = value_rec(y, memo, j - 3, k - 1)?;
    let b = value_rec(y, memo, j + 3, k - 1)?;
    let c = value_rec(y, memo, j - 1, k - 1)?;
    let d = value_rec(y, memo, j + 1, k - 1)?;
    let den = value_rec(y, memo, j, k - 2)?;
    if den.is_zero() {
        return Err(ConfinementError::IndeterminateValue { j, level: k - 2 });
    }
    let out = (a * b + m_value(y, j, k - 1) * c * d) / den;
    memo.insert((j, k), out.clone());
    Ok(out)
}

/// Memoized evaluation of the level polynomials on fixed parameters, via the
/// same recurrence that defines them.  Fails with
/// [`ConfinementError::IndeterminateValue`] when an intermediate value
/// vanishes, in which case [`ResolvedFValues`] still recovers the value.
pub struct FValueCache<'a, F: Field> {
    y: &'a YParams<F>,
    memo: HashMap<(i64, i64), F>,
}

impl<'a, F: Field> FValueCache<'a, F> {
    pub fn new(y: &'a YParams<F>) -> Self {
        FValueCache {
            y,
            memo: HashMap::new(),
        }
    }

    /// The parameters this cache evaluates against.
    pub fn params(&self) -> &YParams<F> {
        self.y
    }

    /// The value of the level-`k` polynomial at doubled index `j`.
    pub fn value(&mut self, j: i64, k: i64) -> Result<F, ConfinementError> {
        value_rec(self.y, &mut self.memo, j, k)
    }
}

/// The value of a single level polynomial on the given parameters.
pub fn f_value<F: Field>(y: &YParams<F>, j: i64, k: i64) -> Result<F, ConfinementError> {
    FValueCache::new(y).value(j, k)
}

/// Exact level-polynomial values that survive vanishing intermediates: the
/// parameters are deformed along a random direction in an auxiliary
/// variable, the recurrence runs over rational functions, and the value is
/// read off at the base point.  Values are deformation independent because
/// each level polynomial is an honest polynomial in the parameters.
pub struct ResolvedFValues<'a> {
    y: &'a YParams<Rational>,
    src: RandomSource,
    deformed: Option<YParams<RatFunc>>,
    memo: HashMap<(i64, i64), RatFunc>,
}

impl<'a> ResolvedFValues<'a> {
    pub fn new(y: &'a YParams<Rational>, src: RandomSource) -> Self {
        ResolvedFValues {
            y,
            src,
            deformed: None,
            memo: HashMap::new(),
        }
    }

    fn rebuild(&mut self) {
        let values = self
            .y
            .values()
            .iter()
            .map(|v| {
                RatFunc::from_rational(v)
                    + RatFunc::t() * RatFunc::from_rational(&self.src.nonzero_rational())
            })
            .collect();
        self.deformed = Some(YParams::new(self.y.scheme(), values));
        self.memo.clear();
    }

    /// The exact value of the level-`k` polynomial at doubled index `j`.
    pub fn value(&mut self, j: i64, k: i64) -> Result<Rational, ConfinementError> {
        for _ in 0..MAX_RANDOM_RETRIES {
            if self.deformed.is_none() {
                self.rebuild();
            }
            let params = self.deformed.as_ref().expect("deformation was just built");
            match value_rec(params, &mut self.memo, j, k) {
                Ok(v) => {
                    return v
                        .limit_at_zero()
                        .map_err(|_| ConfinementError::ResolutionFailed)
                }
                Err(_) => {
                    // The direction hit a vanishing intermediate identically;
                    // resample and retry.
                    self.deformed = None;
                }
            }
        }
        Err(ConfinementError::ResolutionFailed)
    }
}

// ---------------------------------------------------------------------------
// Coordinate and parameter formulas for iterated maps.
// ---------------------------------------------------------------------------

/// `x_j` of the `k`-fold image, from the coordinates and parameters of the
/// input polygon, using a shared value cache.
pub fn iterate_x_with<F: Field>(
    cache: &mut FValueCache<'_, F>,
    x: &XCoords<F>,
    j: i64,
    k: i64,
) -> Result<F, ConfinementError> {
    assert!(k >= 0, "iteration count must be nonnegative");
    if k == 0 {
        return Ok(x.get(j).clone());
    }
    let prod = {
        let y = cache.params();
        (-k..k).fold(F::one(), |acc, i| acc * y.get(j + 1 + 3 * i).clone())
    };
    let (base, top, bot) = if (j + k).rem_euclid(2) == 0 {
        (j - 3 * k, [(j + 2, k - 1), (j - 3, k)], [(j - 2, k - 1), (j + 1, k)])
    } else {
        (j + 3 * k, [(j - 3, k - 1), (j + 2, k)], [(j + 1, k - 1), (j - 2, k)])
    };
    let mut num = x.get(base).clone() * prod;
    for (a, b) in top {
        num = num * cache.value(a, b)?;
    }
    let mut den = F::one();
    for (a, b) in bot {
        let v = cache.value(a, b)?;
        if v.is_zero() {
            return Err(ConfinementError::SingularAtStep { k, j: a, level: b });
        }
        den = den * v;
    }
    Ok(num / den)
}

/// `y_j` of the `k`-fold image, from the parameters of the input polygon,
/// using a shared value cache.
pub fn iterate_y_with<F: Field>(
    cache: &mut FValueCache<'_, F>,
    j: i64,
    k: i64,
) -> Result<F, ConfinementError> {
    assert!(k >= 0, "iteration count must be nonnegative");
    if k == 0 {
        return Ok(cache.params().get(j).clone());
    }
    let (front, top, bot) = if (j + k).rem_euclid(2) == 0 {
        let m = m_value(cache.params(), j, k);
        (m, [(j - 1, k), (j + 1, k)], [(j - 3, k), (j + 3, k)])
    } else {
        let m = m_value(cache.params(), j, k - 1);
        let inv = m.checked_inv().map_err(ConfinementError::Scalar)?;
        (
            inv,
            [(j - 3, k - 1), (j + 3, k - 1)],
            [(j - 1, k - 1), (j + 1, k - 1)],
        )
    };
    let mut num = front;
    for (a, b) in top {
        num = num * cache.value(a, b)?;
    }
    let mut den = F::one();
    for (a, b) in bot {
        let v = cache.value(a, b)?;
        if v.is_zero() {
            return Err(ConfinementError::SingularAtStep { k, j: a, level: b });
        }
        den = den * v;
    }
    Ok(num / den)
}

/// `x_j` of the `k`-fold pentagram image computed from the input data alone.
pub fn iterate_x<F: Field>(
    x: &XCoords<F>,
    y: &YParams<F>,
    j: i64,
    k: i64,
) -> Result<F, ConfinementError> {
    iterate_x_with(&mut FValueCache::new(y), x, j, k)
}

/// `y_j` of the `k`-fold pentagram image computed from the input parameters
/// alone.
pub fn iterate_y<F: Field>(y: &YParams<F>, j: i64, k: i64) -> Result<F, ConfinementError> {
    iterate_y_with(&mut FValueCache::new(y), j, k)
}

/// `x_j` of the `k`-fold image through singular intermediate steps: level
/// polynomial values are resolved by deformation, so the result exists
/// whenever the step-`k` denominators are nonzero.
pub fn iterate_x_resolved(
    x: &XCoords<Rational>,
    y: &YParams<Rational>,
    j: i64,
    k: i64,
    src: &RandomSource,
) -> Result<Rational, ConfinementError> {
    assert!(k >= 0, "iteration count must be nonnegative");
    if k == 0 {
        return Ok(x.get(j).clone());
    }
    let mut values = ResolvedFValues::new(y, src.child(0x1746));
    let prod = (-k..k).fold(Rational::one(), |acc, i| acc * y.get(j + 1 + 3 * i).clone());
    let (base, top, bot) = if (j + k).rem_euclid(2) == 0 {
        (j - 3 * k, [(j + 2, k - 1), (j - 3, k)], [(j - 2, k - 1), (j + 1, k)])
    } else {
        (j + 3 * k, [(j - 3, k - 1), (j + 2, k)], [(j + 1, k - 1), (j - 2, k)])
    };
    let mut num = x.get(base).clone() * prod;
    for (a, b) in top {
        num = num * values.value(a, b)?;
    }
    let mut den = Rational::one();
    for (a, b) in bot {
        let v = values.value(a, b)?;
        if v.is_zero() {
            return Err(ConfinementError::SingularAtStep { k, j: a, level: b });
        }
        den = den * v;
    }
    Ok(num / den)
}

/// `y_j` of the `k`-fold image through singular intermediate steps.
pub fn iterate_y_resolved(
    y: &YParams<Rational>,
    j: i64,
    k: i64,
    src: &RandomSource,
) -> Result<Rational, ConfinementError> {
    assert!(k >= 0, "iteration count must be nonnegative");
    if k == 0 {
        return Ok(y.get(j).clone());
    }
    let mut values = ResolvedFValues::new(y, src.child(0x1747));
    let (front, top, bot) = if (j + k).rem_euclid(2) == 0 {
        let m = m_value(y, j, k);
        (m, [(j - 1, k), (j + 1, k)], [(j - 3, k), (j + 3, k)])
    } else {
        let m = m_value(y, j, k - 1);
        let inv = m.checked_inv().map_err(ConfinementError::Scalar)?;
        (
            inv,
            [(j - 3, k - 1), (j + 3, k - 1)],
            [(j - 1, k - 1), (j + 1, k - 1)],
        )
    };
    let mut num = front;
    for (a, b) in top {
        num = num * values.value(a, b)?;
    }
    let mut den = Rational::one();
    for (a, b) in bot {
        let v = values.value(a, b)?;
        if v.is_zero() {
            return Err(ConfinementError::SingularAtStep { k, j: a, level: b });
        }
        den = den * v;
    }
    Ok(num / den)
}

// ---------------------------------------------------------------------------
// Step singularity detection.
// ---------------------------------------------------------------------------

fn scan_singular_levels(
    values: &mut ResolvedFValues<'_>,
    two_n: i64,
    k: i64,
) -> Result<Vec<(i64, i64)>, ConfinementError> {
    let mut out = Vec::new();
    for level in [k - 1, k] {
        if level < 1 {
            continue;
        }
        for j in 0..two_n {
            // Only opposite-parity pairs appear as formula denominators.
            if (j + level).rem_euclid(2) == 0 {
                continue;
            }
            if values.value(j, level)?.is_zero() {
                out.push((j, level));
            }
        }
    }
    Ok(out)
}

/// The vanishing denominator data of the step-`k` formulas: pairs
/// `(j, level)` with the level polynomial at `j` equal to zero, `level` in
/// `{k-1, k}` and `j + level` odd.  Empty exactly when step `k` is regular.
pub fn singular_levels(
    y: &YParams<Rational>,
    k: i64,
    src: &RandomSource,
) -> Result<Vec<(i64, i64)>, ConfinementError> {
    let mut values = ResolvedFValues::new(y, src.child(0x51C5));
    scan_singular_levels(&mut values, 2 * y.n() as i64, k)
}

/// Whether the `k`-fold image hits a singularity of the map.
pub fn step_is_singular(
    y: &YParams<Rational>,
    k: i64,
    src: &RandomSource,
) -> Result<bool, ConfinementError> {
    Ok(!singular_levels(y, k, src)?.is_empty())
}

/// The smallest step in `1..=k_max` at which the iterated map is regular,
/// if any.
pub fn first_regular_step(
    y: &YParams<Rational>,
    k_max: i64,
    src: &RandomSource,
) -> Result<Option<i64>, ConfinementError> {
    let mut values = ResolvedFValues::new(y, src.child(0xF125));
    let two_n = 2 * y.n() as i64;
    for k in 1..=k_max {
        if scan_singular_levels(&mut values, two_n, k)?.is_empty() {
            return Ok(Some(k));
        }
    }
    Ok(None)
}

// ---------------------------------------------------------------------------
// Singularity types.
// ---------------------------------------------------------------------------

/// The combinatorial shape of a singularity type on `n` vertex labels.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TypeClass {
    /// A single label, or a cyclic progression of step two: labels
    /// `i - (m-1), i - (m-1) + 2, ..., i + (m-1)` centered at `i`.
    SingletonOrStep2Progression { i: i64, m: i64 },
    /// A run of `m` consecutive labels; the center is a half integer when
    /// `m` is even, so it is stored doubled.
    Step1Progression { twice_i: i64, m: i64 },
    /// Every label but one, on an odd cycle.
    ComplementOfPoint { i: i64 },
    /// No recognized progression structure.
    General,
    /// A set that forces total degeneration: all labels, or a full parity
    /// class on an even cycle.
    Exceptional,
}

/// A singularity type: a nonempty set of vertex labels in `1..=n` marking
/// which vertex loci contain the polygon, with its recognized shape.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SingularityType {
    n: i64,
    members: BTreeSet<i64>,
    class: TypeClass,
}

fn cyclic_progression_start(n: i64, members: &BTreeSet<i64>, step: i64) -> Option<i64> {
    let m = members.len() as i64;
    for &start in members {
        let walked: BTreeSet<i64> = (0..m)
            .map(|u| (start + step * u - 1).rem_euclid(n) + 1)
            .collect();
        if walked.len() == m as usize && walked == *members {
            return Some(start);
        }
    }
    None
}

fn classify(n: i64, members: &BTreeSet<i64>) -> TypeClass {
    let m = members.len() as i64;
    if m == n {
        return TypeClass::Exceptional;
    }
    if n % 2 == 0 {
        let odds = (1..=n).step_by(2).all(|i| members.contains(&i));
        let evens = (2..=n).step_by(2).all(|i| members.contains(&i));
        if odds || evens {
            return TypeClass::Exceptional;
        }
    }
    if n % 2 == 1 && m == n - 1 {
        let missing = (1..=n)
            .find(|i| !members.contains(i))
            .expect("a proper subset misses a label");
        return TypeClass::ComplementOfPoint { i: missing };
    }
    if let Some(start) = cyclic_progression_start(n, members, 2) {
        let i = (start + (m - 1) - 1).rem_euclid(n) + 1;
        return TypeClass::SingletonOrStep2Progression { i, m };
    }
    if m >= 2 {
        if let Some(start) = cyclic_progression_start(n, members, 1) {
            let twice_i = (2 * start + (m - 1) - 1).rem_euclid(2 * n) + 1;
            return TypeClass::Step1Progression { twice_i, m };
        }
    }
    TypeClass::General
}

impl SingularityType {
    /// Builds a type from vertex labels (any integer representatives).
    pub fn new(n: i64, members: impl IntoIterator<Item = i64>) -> Result<Self, ConfinementError> {
        if n < 5 {
            return Err(ConfinementError::InvalidType(format!(
                "need at least five vertices, got {n}"
            )));
        }
        let members: BTreeSet<i64> = members
            .into_iter()
            .map(|i| (i - 1).rem_euclid(n) + 1)
            .collect();
        if members.is_empty() {
            return Err(ConfinementError::InvalidType("empty label set".into()));
        }
        let class = classify(n, &members);
        Ok(SingularityType { n, members, class })
    }

    pub fn n(&self) -> i64 {
        self.n
    }

    /// The vertex labels, reduced to `1..=n`.
    pub fn members(&self) -> &BTreeSet<i64> {
        &self.members
    }

    pub fn class(&self) -> &TypeClass {
        &self.class
    }

    /// Parses a type string: `step2:i=4,m=2`, `step1:i=7/2,m=2` (also
    /// accepts `3.5` for `7/2`), `complement:i=7`, or `set:{3,4,6}`.
    pub fn parse(n: i64, text: &str) -> Result<Self, ConfinementError> {
        let bad = |msg: &str| ConfinementError::InvalidType(format!("{msg}: {text}"));
        let (head, rest) = text
            .split_once(':')
            .ok_or_else(|| bad("missing class prefix"))?;
        match head {
            "step2" => {
                let (i, m) = parse_center_and_size(rest, text)?;
                let i = parse_integer_label(&i, text)?;
                if m < 1 {
                    return Err(bad("progression size must be positive"));
                }
                SingularityType::new(n, (0..m).map(|u| i - (m - 1) + 2 * u))
            }
            "step1" => {
                let (i, m) = parse_center_and_size(rest, text)?;
                let twice_i = parse_half_integer_label(&i, text)?;
                if m < 1 {
                    return Err(bad("progression size must be positive"));
                }
                if (twice_i + m).rem_euclid(2) != 1 {
                    return Err(bad("run length does not match the center"));
                }
                SingularityType::new(n, (0..m).map(|u| (twice_i - (m - 1)) / 2 + u))
            }
            "complement" => {
                let i = parse_integer_label(
                    rest.strip_prefix("i=").ok_or_else(|| bad("expected i="))?,
                    text,
                )?;
                let missing = (i - 1).rem_euclid(n) + 1;
                SingularityType::new(n, (1..=n).filter(|&v| v != missing))
            }
            "set" => {
                let inner = rest
                    .strip_prefix('{')
                    .and_then(|r| r.strip_suffix('}'))
                    .ok_or_else(|| bad("expected braces around the label set"))?;
                let mut labels = Vec::new();
                for part in inner.split(',') {
                    labels.push(parse_integer_label(part.trim(), text)?);
                }
                SingularityType::new(n, labels)
            }
            _ => Err(bad("unknown class prefix")),
        }
    }

    /// The canonical type string; parsing it reproduces this type.
    pub fn spec_string(&self) -> String {
        match &self.class {
            TypeClass::SingletonOrStep2Progression { i, m } => format!("step2:i={i},m={m}"),
            TypeClass::Step1Progression { twice_i, m } => {
                format!("step1:i={},m={m}", format_index(*twice_i))
            }
            TypeClass::ComplementOfPoint { i } => format!("complement:i={i}"),
            TypeClass::General | TypeClass::Exceptional => {
                let inner: Vec<String> = self.members.iter().map(|i| i.to_string()).collect();
                format!("set:{{{}}}", inner.join(","))
            }
        }
    }

    /// The doubled vertex labels of the members, in `[0, 2n)`.
    pub fn members_doubled(&self) -> Vec<i64> {
        let two_n = 2 * self.n;
        let mut out: Vec<i64> = self
            .members
            .iter()
            .map(|&i| (2 * i).rem_euclid(two_n))
            .collect();
        out.sort_unstable();
        out
    }

    /// The predicted doubled labels of the image singularity data after the
    /// confining step, for progression classes.  A step-two input progression
    /// lands on a step-one range of side labels and vice versa.
    pub fn predicted_image_doubled(&self) -> Option<Vec<i64>> {
        let two_n = 2 * self.n;
        let (center_doubled, lo_off, step, m) = match &self.class {
            TypeClass::SingletonOrStep2Progression { i, m } => (2 * i, -(m - 1), 2, *m),
            TypeClass::Step1Progression { twice_i, m } => (*twice_i, -2 * (m - 1), 4, *m),
            _ => return None,
        };
        let mut out: Vec<i64> = (0..m)
            .map(|u| (center_doubled + lo_off + step * u).rem_euclid(two_n))
            .collect();
        out.sort_unstable();
        out.dedup();
        Some(out)
    }
}

impl fmt::Display for SingularityType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.spec_string())
    }
}

fn parse_center_and_size(rest: &str, whole: &str) -> Result<(String, i64), ConfinementError> {
    let bad = |msg: &str| ConfinementError::InvalidType(format!("{msg}: {whole}"));
    let (i_part, m_part) = rest
        .split_once(',')
        .ok_or_else(|| bad("expected i=..,m=.."))?;
    let i = i_part
        .strip_prefix("i=")
        .ok_or_else(|| bad("expected i="))?
        .trim()
        .to_string();
    let m = m_part
        .strip_prefix("m=")
        .ok_or_else(|| bad("expected m="))?
        .trim()
        .parse::<i64>()
        .map_err(|_| bad("size is not an integer"))?;
    Ok((i, m))
}

fn parse_integer_label(text: &str, whole: &str) -> Result<i64, ConfinementError> {
    text.trim()
        .parse::<i64>()
        .map_err(|_| ConfinementError::InvalidType(format!("label is not an integer: {whole}")))
}

/// Parses `7/2`, `3.5`, or `4` into a doubled label (7, 7, and 8 here).
fn parse_half_integer_label(text: &str, whole: &str) -> Result<i64, ConfinementError> {
    let bad = || ConfinementError::InvalidType(format!("bad half-integer label: {whole}"));
    let text = text.trim();
    if let Some((num, den)) = text.split_once('/') {
        if den.trim() != "2" {
            return Err(bad());
        }
        return num.trim().parse::<i64>().map_err(|_| bad());
    }
    if let Some((whole_part, frac)) = text.split_once('.') {
        if frac != "5" {
            return Err(bad());
        }
        let negative = whole_part.starts_with('-');
        let base = whole_part.parse::<i64>().map_err(|_| bad())?;
        return Ok(2 * base + if negative { -1 } else { 1 });
    }
    Ok(2 * text.parse::<i64>().map_err(|_| bad())?)
}

// ---------------------------------------------------------------------------
// Confinement prediction.
// ---------------------------------------------------------------------------

/// What the confinement theorems say about a singularity type.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ConfinementPrediction {
    /// The singularity is confined: the iterated map first becomes regular
    /// at the given step, and the image lies on the side loci with the
    /// given doubled labels.
    Confined {
        first_regular_step: i64,
        image_doubled: Vec<i64>,
    },
    /// On an odd cycle every proper singularity escapes within this many
    /// steps, but no image locus is predicted.
    WorstCaseBound { first_regular_step_at_most: i64 },
    /// The polygon degenerates completely; no meaningful iterate exists.
    Exceptional,
    /// Outside every proved statement; only experiments apply.
    ExperimentalOnly,
}

/// Applies the confinement theorems to a singularity type.
pub fn predict_confinement(
    ty: &SingularityType,
) -> Result<ConfinementPrediction, ConfinementError> {
    let n = ty.n();
    let bound = ConfinementPrediction::WorstCaseBound {
        first_regular_step_at_most: n + 1,
    };
    match ty.class() {
        TypeClass::Exceptional => Ok(ConfinementPrediction::Exceptional),
        TypeClass::SingletonOrStep2Progression { m, .. }
        | TypeClass::Step1Progression { m, .. } => {
            if n >= 3 * m + 4 {
                Ok(ConfinementPrediction::Confined {
                    first_regular_step: m + 2,
                    image_doubled: ty
                        .predicted_image_doubled()
                        .expect("progression classes predict an image"),
                })
            } else if n % 2 == 1 {
                Ok(bound)
            } else {
                Err(ConfinementError::OutOfTheoremRange {
                    m: *m,
                    required: 3 * m + 4,
                })
            }
        }
        TypeClass::ComplementOfPoint { .. } => Ok(bound),
        TypeClass::General => {
            if n % 2 == 1 {
                Ok(bound)
            } else {
                Ok(ConfinementPrediction::ExperimentalOnly)
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Knight paths.
// ---------------------------------------------------------------------------

/// A cyclic knight-move permutation matrix: the unique size-`k` matrix whose
/// ones all carry one of three array values determined by the offset `l`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KnightPath {
    k: i64,
    l: i64,
    sigma: i64,
    segments: (usize, usize, usize),
    matrix: Asm,
}

impl KnightPath {
    pub fn k(&self) -> i64 {
        self.k
    }

    pub fn l(&self) -> i64 {
        self.l
    }

    /// The middle-value correction: zero at odd sizes, otherwise plus or
    /// minus two depending on the offset class modulo four.
    pub fn sigma(&self) -> i64 {
        self.sigma
    }

    /// How many ones carry the low, middle, and high value respectively.
    pub fn segments(&self) -> (usize, usize, usize) {
        self.segments
    }

    pub fn matrix(&self) -> &Asm {
        &self.matrix
    }

    /// The three array values the ones are allowed to carry, relative to a
    /// doubled index `j`.
    pub fn allowed_values(&self, j: i64) -> [i64; 3] {
        [
            j + self.l - 2 * self.k,
            j + self.l + self.sigma,
            j + self.l + 2 * self.k,
        ]
    }
}

/// Builds the knight path of size `k` at diagonal offset `l`; the offset
/// must satisfy `|l| <= k + 1` and `l = k + 1 (mod 2)`.
pub fn knight_path(k: i64, l: i64) -> Result<KnightPath, ConfinementError> {
    assert!(k >= 1, "knight paths need a positive size");
    if l.abs() > k + 1 || (l - (k + 1)).rem_euclid(2) != 0 {
        return Err(ConfinementError::OffsetOutOfRange { k, l });
    }
    let sigma = if k % 2 == 1 {
        0
    } else if (l + k).rem_euclid(4) == 1 {
        -2
    } else {
        2
    };
    let start = (l + k - 1) / 2;
    let mut segments = [0usize; 3];
    let mut entries = vec![0i8; (k * k) as usize];
    let mut used = vec![false; k as usize];
    for u in 0..k {
        let virtual_row = start - 2 * u;
        let wraps = (k - virtual_row).div_euclid(k);
        let mut row = (virtual_row - 1).rem_euclid(k) + 1;
        if k % 2 == 0 && wraps == 1 {
            row += sigma / 2;
        }
        assert!(
            (1..=k).contains(&row),
            "knight row {row} escaped the band at size {k}, offset {l}"
        );
        assert!(
            !used[(row - 1) as usize],
            "knight rows collided at size {k}, offset {l}"
        );
        used[(row - 1) as usize] = true;
        segments[wraps as usize] += 1;
        let col = u + 1;
        entries[((row - 1) * k + (col - 1)) as usize] = 1;
    }
    let matrix = Asm::new(k as usize, entries)
        .expect("a knight path is a permutation matrix");
    Ok(KnightPath {
        k,
        l,
        sigma,
        segments: (segments[0], segments[1], segments[2]),
        matrix,
    })
}

// ---------------------------------------------------------------------------
// Vanishing analysis under restriction.
// ---------------------------------------------------------------------------

/// What restriction to `y_i = -1` on a label set does to a level polynomial.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VanishingStatus {
    /// The restricted polynomial is identically zero.
    IdenticallyZero,
    /// The restricted polynomial is provably nonzero.
    Nonzero,
    /// The criteria are silent; see [`vanishing_report`] for a direct check.
    Unknown,
}

/// Decides, by criteria alone, whether restricting the level-`k` polynomial
/// at doubled index `j` to `y_v = -1` for `v` in `s` kills it: full array
/// rows or columns inside `s` force zero, while no avoiding matrix (for
/// sizes up to four), a unique avoiding matrix, or a short step-two or
/// step-four progression of the complementary parity force nonzero.
pub fn vanishing_analysis(s: &BTreeSet<i64>, j: i64, k: i64) -> VanishingStatus {
    if k <= 0 || s.is_empty() {
        return VanishingStatus::Nonzero;
    }
    let lo = j - 3 * (k - 1);
    let hi = j + 3 * (k - 1);
    if s.iter().all(|&v| v < lo || v > hi) {
        return VanishingStatus::Nonzero;
    }
    let mut l = -(k - 1);
    while l <= k - 1 {
        let row = (0..k).all(|u| s.contains(&(j + l - 2 * (k - 1) + 4 * u)));
        let col = (0..k).all(|u| s.contains(&(j + 2 * l - (k - 1) + 2 * u)));
        if row || col {
            return VanishingStatus::IdenticallyZero;
        }
        l += 2;
    }
    if k <= 4 {
        let avoiders = asm_enumerate_avoiding(k as usize, s, j);
        if avoiders.is_empty() {
            return VanishingStatus::IdenticallyZero;
        }
        if avoiders.len() == 1 {
            return VanishingStatus::Nonzero;
        }
    }
    if is_short_progression(s, j, k) {
        return VanishingStatus::Nonzero;
    }
    VanishingStatus::Unknown
}

/// An arithmetic progression shorter than `k` with step two or four, all
/// elements of parity `j + k + 1`.
fn is_short_progression(s: &BTreeSet<i64>, j: i64, k: i64) -> bool {
    let m = s.len() as i64;
    if m >= k {
        return false;
    }
    if s.iter().any(|&v| (v - (j + k + 1)).rem_euclid(2) != 0) {
        return false;
    }
    if m == 1 {
        return true;
    }
    let v: Vec<i64> = s.iter().copied().collect();
    let step = v[1] - v[0];
    (step == 2 || step == 4) && v.windows(2).all(|w| w[1] - w[0] == step)
}

/// The analysis verdict backed by a direct computation for levels up to
/// five.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ResolvedVanishing {
    Zero,
    Nonzero,
    UnknownResolvedZero,
    UnknownResolvedNonzero,
}

/// Runs [`vanishing_analysis`] and settles the unknown cases by expanding
/// and restricting the polynomial itself.
pub fn vanishing_report(s: &BTreeSet<i64>, j: i64, k: i64) -> ResolvedVanishing {
    assert!(k <= 5, "direct resolution only supports levels up to five");
    match vanishing_analysis(s, j, k) {
        VanishingStatus::IdenticallyZero => ResolvedVanishing::Zero,
        VanishingStatus::Nonzero => ResolvedVanishing::Nonzero,
        VanishingStatus::Unknown => {
            if crate::fpoly::f_recursive(j, k).restrict(s).is_zero() {
                ResolvedVanishing::UnknownResolvedZero
            } else {
                ResolvedVanishing::UnknownResolvedNonzero
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Worst-case analysis on odd cycles.
// ---------------------------------------------------------------------------

/// The expanded labels that reduce into the punctured even cycle: even
/// values in the window of the level-`k` polynomial at `j` that are not
/// multiples of `2n`.
fn worst_case_forbidden(n: i64, j: i64, k: i64) -> BTreeSet<i64> {
    let two_n = 2 * n;
    let mut s = BTreeSet::new();
    let mut v = j - 3 * k;
    if v.rem_euclid(2) != 0 {
        v += 1;
    }
    while v <= j + 3 * k {
        if v.rem_euclid(two_n) != 0 {
            s.insert(v);
        }
        v += 2;
    }
    s
}

/// The level-`k` polynomial at `j`, with variables folded onto the cycle of
/// length `2n` and every even variable except `y_0` set to minus one,
/// computed from the avoiding matrices.
pub fn cyclic_restricted_f(n: i64, j: i64, k: i64) -> YPoly {
    let ctx = AsmContext::new(k);
    let s = worst_case_forbidden(n, j, k);
    let (_, p) = cyclic_restricted_terms(&ctx, n, j, k, &s);
    p
}

fn cyclic_restricted_terms(
    ctx: &AsmContext,
    n: i64,
    j: i64,
    k: i64,
    s: &BTreeSet<i64>,
) -> (Vec<Asm>, YPoly) {
    let avoiders = asm_enumerate_avoiding(k as usize, s, j);
    let mut p = YPoly::zero();
    for a in &avoiders {
        let b = ctx.b0(a);
        let weight = ctx.wt(a, j).mul(&ctx.wt(&b, j));
        let mut term = YPoly::monomial(weight, 1).restrict(s);
        for (i, l) in a.ones() {
            let v = array_value(j, k, i, l);
            term = term.mul(&YPoly::one().add(&YPoly::var(v)));
        }
        p += &term;
    }
    (avoiders, p.cyclic_reduce(n as usize))
}

/// The outcome of the worst-case vanishing check on an odd cycle.
#[derive(Clone, Debug)]
pub struct WorstCaseReport {
    pub n: i64,
    /// Index and level pairs examined (levels `n` and `n + 1`, opposite
    /// parity indices).
    pub pairs_checked: usize,
    pub trials_per_pair: usize,
    /// Every restricted polynomial evaluated nonzero on every admissible
    /// random assignment (free value off zero and minus one, odd values
    /// satisfying the cycle product relation).
    pub all_nonzero_on_trials: bool,
    /// Every restricted polynomial vanishes when the free value is also set
    /// to minus one.
    pub vanishes_at_special_value: bool,
    /// Each restricted polynomial is a binomial power times one monomial
    /// (two at the exceptional middle index).
    pub factor_shape_verified: bool,
    /// The avoiding matrices have the predicted count and entry pattern.
    pub avoider_shapes_verified: bool,
}

impl WorstCaseReport {
    pub fn passed(&self) -> bool {
        self.all_nonzero_on_trials
            && self.vanishes_at_special_value
            && self.factor_shape_verified
            && self.avoider_shapes_verified
    }
}

/// Checks the worst singularity type on an odd cycle of length `n`: every
/// even parameter except one is set to minus one.  For levels `n` and
/// `n + 1` the restricted level polynomials must be nonzero whenever the
/// free value avoids zero and minus one, and must vanish at minus one.
/// Desk-scale sizes only (`n` at most seven).
pub fn worst_case_check(n: i64, seed: u64) -> WorstCaseReport {
    assert!(
        n % 2 == 1 && (3..=7).contains(&n),
        "worst-case analysis supports odd cycle lengths from three to seven"
    );
    let two_n = 2 * n;
    let trials = 20;
    let mut src = RandomSource::new(seed);
    let mut report = WorstCaseReport {
        n,
        pairs_checked: 0,
        trials_per_pair: trials,
        all_nonzero_on_trials: true,
        vanishes_at_special_value: true,
        factor_shape_verified: true,
        avoider_shapes_verified: true,
    };
    let binomial = YPoly::one().add(&YPoly::var(0));
    for k in [n, n + 1] {
        let ctx = AsmContext::new(k);
        for j in 0..two_n {
            if (j + k).rem_euclid(2) == 0 {
                continue;
            }
            report.pairs_checked += 1;
            let s = worst_case_forbidden(n, j, k);
            let (avoiders, p) = cyclic_restricted_terms(&ctx, n, j, k, &s);
            let exponent = check_avoider_shapes(&avoiders, &mut report, n, j, k);
            check_factor_shape(&p, &binomial, exponent, j == n, &mut report);
            report.vanishes_at_special_value &=
                p.restrict(&BTreeSet::from([0])).is_zero();
            for _ in 0..trials {
                report.all_nonzero_on_trials &=
                    !admissible_evaluation(&p, n, &mut src).is_zero();
            }
        }
    }
    report
}

/// Validates avoider count and entry pattern, returning the expected
/// binomial exponent.
fn check_avoider_shapes(
    avoiders: &[Asm],
    report: &mut WorstCaseReport,
    n: i64,
    j: i64,
    k: i64,
) -> i64 {
    let is_permutation = |a: &Asm| {
        a.ones().len() == k as usize
            && (1..=k as usize).all(|i| (1..=k as usize).all(|l| a.entry(i, l) >= 0))
    };
    if k == n {
        report.avoider_shapes_verified &= avoiders.len() == 1 && is_permutation(&avoiders[0]);
        n
    } else if j != n {
        let good = avoiders.len() == 1 && {
            let a = &avoiders[0];
            let minus = (1..=k as usize)
                .flat_map(|i| (1..=k as usize).map(move |l| (i, l)))
                .filter(|&(i, l)| a.entry(i, l) < 0)
                .count();
            a.ones().len() == (k + 1) as usize && minus == 1
        };
        report.avoider_shapes_verified &= good;
        n + 2
    } else {
        report.avoider_shapes_verified &=
            avoiders.len() == 2 && avoiders.iter().all(is_permutation);
        n + 1
    }
}

/// The restricted polynomial must be a power of `1 + y_0` times a single
/// monomial, or times a two-term sum at the exceptional middle index.
fn check_factor_shape(
    p: &YPoly,
    binomial: &YPoly,
    exponent: i64,
    middle: bool,
    report: &mut WorstCaseReport,
) {
    let mut power = YPoly::one();
    for _ in 0..exponent {
        power = power.mul(binomial);
    }
    match p.div_exact(&power) {
        Ok(q) => {
            let expected = if middle { 2 } else { 1 };
            report.factor_shape_verified &= q.term_count() == expected;
        }
        Err(_) => report.factor_shape_verified = false,
    }
}

/// Evaluates on an admissible assignment: even values minus one except the
/// free slot, odd values random and tied by the cycle product relation.
fn admissible_evaluation(p: &YPoly, n: i64, src: &mut RandomSource) -> Rational {
    let two_n = 2 * n;
    let mut assignment: Vec<Rational> = vec![-Rational::one(); two_n as usize];
    let free = loop {
        let v = src.nonzero_rational();
        if v != -Rational::one() {
            break v;
        }
    };
    assignment[0] = free.clone();
    let mut product = free;
    for r in (1..two_n - 1).step_by(2) {
        let v = src.nonzero_rational();
        product = product * v.clone();
        assignment[r as usize] = v;
    }
    assignment[(two_n - 1) as usize] = Rational::one() / product;
    p.eval(|i| assignment[i.rem_euclid(two_n) as usize].clone())
        .expect("restricted polynomials have nonnegative exponents")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fpoly::{self, avoids};
    use crate::polygon::{random_polygon, random_polygon_in_xs, Indexing, TwistedPolygon};
    use crate::scalar::rational;

    fn sample_params(n: usize, seed: u64) -> YParams<Rational> {
        let mut src = RandomSource::new(seed);
        let values = (0..2 * n).map(|_| src.nonzero_rational()).collect();
        YParams::new(Indexing::Integer, values)
    }

    fn sample_polygon(n: usize, seed: u64) -> TwistedPolygon<Rational> {
        let mut src = RandomSource::new(seed);
        random_polygon(n, Indexing::Integer, &mut src).expect("sampling a polygon")
    }

    #[test]
    fn value_recurrence_matches_symbolic_evaluation() {
        let y = sample_params(7, 11);
        let mut cache = FValueCache::new(&y);
        for k in 0..=4 {
            for j in 0..14 {
                let direct = fpoly::f_recursive(j, k)
                    .eval(|i| y.get(i).clone())
                    .expect("evaluation with nonnegative exponents");
                assert_eq!(cache.value(j, k).expect("regular values"), direct);
            }
        }
    }

    #[test]
    fn resolved_values_agree_with_the_raw_recurrence_on_regular_input() {
        let y = sample_params(6, 3);
        let src = RandomSource::new(99);
        let mut resolved = ResolvedFValues::new(&y, src);
        let mut raw = FValueCache::new(&y);
        for k in 1..=4 {
            for j in 0..12 {
                assert_eq!(
                    resolved.value(j, k).expect("resolved value"),
                    raw.value(j, k).expect("raw value"),
                );
            }
        }
    }

    #[test]
    fn zero_step_iteration_returns_the_input_coordinates() {
        let p = sample_polygon(7, 21);
        let x = p.x_coords().expect("coordinates");
        let y = p.y_params().expect("parameters");
        for j in 0..14 {
            assert_eq!(&iterate_x(&x, &y, j, 0).expect("identity"), x.get(j));
            assert_eq!(&iterate_y(&y, j, 0).expect("identity"), y.get(j));
        }
    }

    #[test]
    fn iterate_formulas_match_the_geometric_map() {
        let p = sample_polygon(7, 5);
        let x = p.x_coords().expect("coordinates");
        let y = p.y_params().expect("parameters");
        let mut image = p;
        let mut cache = FValueCache::new(&y);
        for k in 1..=2 {
            image = image.pentagram().expect("a generic image");
            let xi = image.x_coords().expect("image coordinates");
            let yi = image.y_params().expect("image parameters");
            for j in 0..14 {
                assert_eq!(
                    &iterate_x_with(&mut cache, &x, j, k).expect("formula value"),
                    xi.get(j),
                    "x at index {j}, step {k}",
                );
                assert_eq!(
                    &iterate_y_with(&mut cache, j, k).expect("formula value"),
                    yi.get(j),
                    "y at index {j}, step {k}",
                );
            }
        }
    }

    #[test]
    fn resolved_iteration_matches_the_raw_route_on_regular_input() {
        let p = sample_polygon(6, 8);
        let x = p.x_coords().expect("coordinates");
        let y = p.y_params().expect("parameters");
        let src = RandomSource::new(4);
        for j in 0..12 {
            assert_eq!(
                iterate_x_resolved(&x, &y, j, 2, &src).expect("resolved"),
                iterate_x(&x, &y, j, 2).expect("raw"),
            );
            assert_eq!(
                iterate_y_resolved(&y, j, 2, &src).expect("resolved"),
                iterate_y(&y, j, 2).expect("raw"),
            );
        }
    }

    #[test]
    fn a_singleton_singularity_blocks_two_steps_and_clears_at_the_third() {
        let mut src = RandomSource::new(17);
        let labels = BTreeSet::from([4]);
        let p = random_polygon_in_xs::<Rational>(9, &labels, &mut src).expect("a singular polygon");
        let y = p.y_params().expect("parameters");
        let check = RandomSource::new(30);
        assert!(step_is_singular(&y, 1, &check).expect("scan"));
        assert!(step_is_singular(&y, 2, &check).expect("scan"));
        assert!(!step_is_singular(&y, 3, &check).expect("scan"));
        assert_eq!(
            first_regular_step(&y, 9, &check).expect("scan"),
            Some(3),
        );
        let singular = singular_levels(&y, 1, &check).expect("scan");
        assert!(singular.contains(&(8, 1)), "the marked vertex parameter vanishes");
        let x = p.x_coords().expect("coordinates");
        let hit = iterate_x(&x, &y, 7, 1);
        assert!(
            matches!(hit, Err(ConfinementError::SingularAtStep { k: 1, .. })),
            "iteration across a vanishing denominator reports the step",
        );
    }

    #[test]
    fn knight_path_reproduces_the_worked_examples() {
        let odd = knight_path(7, 2).expect("valid offset");
        assert_eq!(odd.sigma(), 0);
        assert_eq!(odd.segments(), (2, 4, 1));
        assert_eq!(
            odd.matrix().ones(),
            vec![(1, 6), (2, 2), (3, 5), (4, 1), (5, 4), (6, 7), (7, 3)],
        );
        let even = knight_path(6, -3).expect("valid offset");
        assert_eq!(even.sigma(), 2);
        assert_eq!(even.segments(), (1, 3, 2));
        assert_eq!(
            even.matrix().ones(),
            vec![(1, 1), (2, 4), (3, 6), (4, 3), (5, 5), (6, 2)],
        );
    }

    #[test]
    fn knight_paths_use_only_the_three_allowed_values() {
        for k in 1..=8i64 {
            let mut l = -(k + 1);
            while l <= k + 1 {
                let path = knight_path(k, l).expect("valid offset");
                let ones = path.matrix().ones();
                assert_eq!(ones.len(), k as usize, "a permutation at size {k}");
                let allowed = path.allowed_values(0);
                let mut counts = [0usize; 3];
                for (i, c) in ones {
                    let v = array_value(0, k, i, c);
                    let slot = allowed
                        .iter()
                        .position(|&a| a == v)
                        .unwrap_or_else(|| panic!("value {v} at size {k}, offset {l}"));
                    counts[slot] += 1;
                }
                assert_eq!(
                    (counts[0], counts[1], counts[2]),
                    path.segments(),
                    "segment counts at size {k}, offset {l}",
                );
                let forbidden: BTreeSet<i64> = (-3 * k + 3..=3 * k - 3)
                    .filter(|v| (v - (k + 1)).rem_euclid(2) == 0)
                    .filter(|v| !allowed.contains(v))
                    .collect();
                assert!(avoids(path.matrix(), &forbidden, 0));
                l += 2;
            }
        }
    }

    #[test]
    fn knight_path_rejects_offsets_outside_the_band() {
        assert!(matches!(
            knight_path(5, 5),
            Err(ConfinementError::OffsetOutOfRange { k: 5, l: 5 }),
        ));
        assert!(matches!(
            knight_path(5, 8),
            Err(ConfinementError::OffsetOutOfRange { k: 5, l: 8 }),
        ));
        assert!(knight_path(5, -6).is_ok());
    }

    #[test]
    fn singularity_types_classify_and_round_trip() {
        let cases = [
            (9, vec![4], "step2:i=4,m=1"),
            (9, vec![3, 5], "step2:i=4,m=2"),
            (9, vec![2, 4, 6], "step2:i=4,m=3"),
            (9, vec![3, 4], "step1:i=7/2,m=2"),
            (9, vec![3, 4, 5], "step1:i=4,m=3"),
            (9, vec![1, 9], "step1:i=1/2,m=2"),
            (9, vec![3, 4, 6], "set:{3,4,6}"),
            (5, vec![1, 2, 3, 4], "complement:i=5"),
            (8, vec![1, 3, 5, 7], "set:{1,3,5,7}"),
        ];
        for (n, members, expected) in cases {
            let ty = SingularityType::new(n, members.clone()).expect("a valid type");
            assert_eq!(ty.spec_string(), expected, "members {members:?}");
            let reparsed = SingularityType::parse(n, expected).expect("round trip");
            assert_eq!(&reparsed, &ty);
        }
        let wrapped = SingularityType::new(9, [1, 9]).expect("a valid type");
        assert_eq!(
            wrapped.class(),
            &TypeClass::Step1Progression { twice_i: 1, m: 2 },
        );
        let alternating = SingularityType::new(8, [1, 3, 5, 7]).expect("a valid type");
        assert_eq!(alternating.class(), &TypeClass::Exceptional);
        let everything = SingularityType::new(7, 1..=7).expect("a valid type");
        assert_eq!(everything.class(), &TypeClass::Exceptional);
        let decimal = SingularityType::parse(9, "step1:i=3.5,m=2").expect("decimal center");
        assert_eq!(decimal.members(), &BTreeSet::from([3, 4]));
        assert!(SingularityType::parse(9, "step1:i=4,m=2").is_err());
        assert!(SingularityType::parse(9, "orbit:i=4").is_err());
        assert!(SingularityType::new(9, Vec::<i64>::new()).is_err());
    }

    #[test]
    fn confinement_predictions_follow_the_progression_size() {
        let singleton = SingularityType::new(9, [4]).expect("type");
        assert_eq!(
            predict_confinement(&singleton).expect("prediction"),
            ConfinementPrediction::Confined {
                first_regular_step: 3,
                image_doubled: vec![8],
            },
        );
        let pair = SingularityType::new(10, [3, 5]).expect("type");
        assert_eq!(
            predict_confinement(&pair).expect("prediction"),
            ConfinementPrediction::Confined {
                first_regular_step: 4,
                image_doubled: vec![7, 9],
            },
        );
        let run = SingularityType::new(10, [3, 4]).expect("type");
        assert_eq!(
            predict_confinement(&run).expect("prediction"),
            ConfinementPrediction::Confined {
                first_regular_step: 4,
                image_doubled: vec![5, 9],
            },
        );
        let tight = SingularityType::new(6, [4]).expect("type");
        assert!(matches!(
            predict_confinement(&tight),
            Err(ConfinementError::OutOfTheoremRange { m: 1, required: 7 }),
        ));
        let odd_fallback = SingularityType::new(5, [4]).expect("type");
        assert_eq!(
            predict_confinement(&odd_fallback).expect("prediction"),
            ConfinementPrediction::WorstCaseBound {
                first_regular_step_at_most: 6,
            },
        );
        let complement = SingularityType::new(5, [1, 2, 3, 4]).expect("type");
        assert_eq!(
            predict_confinement(&complement).expect("prediction"),
            ConfinementPrediction::WorstCaseBound {
                first_regular_step_at_most: 6,
            },
        );
        let scattered_odd = SingularityType::new(9, [3, 4, 6]).expect("type");
        assert_eq!(
            predict_confinement(&scattered_odd).expect("prediction"),
            ConfinementPrediction::WorstCaseBound {
                first_regular_step_at_most: 10,
            },
        );
        let scattered_even = SingularityType::new(8, [3, 4, 6]).expect("type");
        assert_eq!(
            predict_confinement(&scattered_even).expect("prediction"),
            ConfinementPrediction::ExperimentalOnly,
        );
        let exceptional = SingularityType::new(8, [2, 4, 6, 8]).expect("type");
        assert_eq!(
            predict_confinement(&exceptional).expect("prediction"),
            ConfinementPrediction::Exceptional,
        );
    }

    #[test]
    fn vanishing_analysis_identifies_rows_columns_and_progressions() {
        for k in 2..=5i64 {
            for j in [0, 1] {
                let mut l = -(k - 1);
                while l <= k - 1 {
                    let row: BTreeSet<i64> =
                        (0..k).map(|u| j + l - 2 * (k - 1) + 4 * u).collect();
                    let col: BTreeSet<i64> =
                        (0..k).map(|u| j + 2 * l - (k - 1) + 2 * u).collect();
                    assert_eq!(
                        vanishing_analysis(&row, j, k),
                        VanishingStatus::IdenticallyZero,
                        "row {l} at level {k}",
                    );
                    assert_eq!(
                        vanishing_analysis(&col, j, k),
                        VanishingStatus::IdenticallyZero,
                        "column {l} at level {k}",
                    );
                    l += 2;
                }
            }
        }
        let progression: BTreeSet<i64> = BTreeSet::from([0, 4, 8]);
        assert_eq!(
            vanishing_analysis(&progression, 1, 4),
            VanishingStatus::Nonzero,
        );
        let untouched = BTreeSet::from([100]);
        assert_eq!(vanishing_analysis(&untouched, 0, 3), VanishingStatus::Nonzero);
        let ambiguous = BTreeSet::from([-6, 6]);
        assert_eq!(vanishing_analysis(&ambiguous, 0, 3), VanishingStatus::Unknown);
        let resolved = vanishing_report(&ambiguous, 0, 3);
        let direct = fpoly::f_recursive(0, 3).restrict(&ambiguous).is_zero();
        assert_eq!(
            resolved,
            if direct {
                ResolvedVanishing::UnknownResolvedZero
            } else {
                ResolvedVanishing::UnknownResolvedNonzero
            },
        );
        assert_eq!(
            vanishing_report(&BTreeSet::from([0, 4, 8]), 1, 4),
            ResolvedVanishing::Nonzero,
        );
    }

    #[test]
    fn cyclic_restriction_matches_the_direct_computation_on_a_short_cycle() {
        for k in [3i64, 4] {
            for j in (0..6).filter(|j| (j + k).rem_euclid(2) == 1) {
                let direct = fpoly::f_recursive(j, k)
                    .cyclic_reduce(3)
                    .restrict(&BTreeSet::from([2, 4]));
                assert_eq!(
                    cyclic_restricted_f(3, j, k),
                    direct,
                    "index {j}, level {k}",
                );
            }
        }
    }

    #[test]
    fn cyclic_restriction_matches_the_direct_computation_at_length_five() {
        let direct = fpoly::f_recursive(0, 5)
            .cyclic_reduce(5)
            .restrict(&BTreeSet::from([2, 4, 6, 8]));
        assert_eq!(cyclic_restricted_f(5, 0, 5), direct);
    }

    #[test]
    fn worst_case_check_passes_on_the_smallest_odd_cycles() {
        for n in [3i64, 5] {
            let report = worst_case_check(n, 77);
            assert_eq!(report.pairs_checked as i64, 2 * n);
            assert!(report.passed(), "cycle length {n}: {report:?}");
        }
    }

    #[test]
    fn worst_case_avoiders_match_the_frozen_patterns_at_length_seven() {
        let unique = asm_enumerate_avoiding(8, &worst_case_forbidden(7, 3, 8), 3);
        assert_eq!(unique.len(), 1);
        assert_eq!(
            unique[0].ones(),
            vec![
                (1, 2),
                (2, 5),
                (3, 1),
                (3, 8),
                (4, 4),
                (5, 7),
                (6, 3),
                (7, 6),
                (8, 2),
            ],
        );
        assert_eq!(unique[0].entry(3, 2), -1);
        let middle = asm_enumerate_avoiding(8, &worst_case_forbidden(7, 7, 8), 7);
        assert_eq!(middle.len(), 2);
        let mut ones: Vec<Vec<(usize, usize)>> = middle.iter().map(|a| a.ones()).collect();
        ones.sort();
        assert_eq!(
            ones[0],
            vec![
                (1, 1),
                (2, 4),
                (3, 7),
                (4, 3),
                (5, 6),
                (6, 2),
                (7, 5),
                (8, 8),
            ],
        );
        assert_eq!(
            ones[1],
            vec![
                (1, 8),
                (2, 4),
                (3, 7),
                (4, 3),
                (5, 6),
                (6, 2),
                (7, 5),
                (8, 1),
            ],
        );
    }

    #[test]
    fn corner_swap_weights_follow_the_cyclic_pattern() {
        for n in [3i64, 5] {
            let k = n + 1;
            let j = n;
            let ctx = AsmContext::new(k);
            let avoiders = asm_enumerate_avoiding(k as usize, &worst_case_forbidden(n, j, k), j);
            assert_eq!(avoiders.len(), 2);
            let (a, a_swapped) = if avoiders[0].entry(1, 1) == 1 {
                (&avoiders[0], &avoiders[1])
            } else {
                (&avoiders[1], &avoiders[0])
            };
            let reduce =
                |m: &fpoly::Monomial| YPoly::monomial(m.clone(), 1).cyclic_reduce(n as usize);
            let odd_product = fpoly::Monomial::from_pairs(
                (1..2 * n).step_by(2).map(|r| (r, n)),
            );
            assert_eq!(
                reduce(&ctx.wt(a_swapped, j)),
                reduce(&ctx.wt(a, j).mul(&odd_product)),
                "weights at cycle length {n}",
            );
            let even_product = fpoly::Monomial::from_pairs(
                std::iter::once((0, n + 1))
                    .chain((2..2 * n).step_by(2).map(|r| (r, n + 2))),
            );
            assert_eq!(
                reduce(&ctx.wt(&ctx.b0(a_swapped), j)),
                reduce(&ctx.wt(&ctx.b0(a), j).mul(&even_product)),
                "partner weights at cycle length {n}",
            );
        }
    }

    #[test]
    fn admissible_evaluations_respect_the_product_relation() {
        let mut src = RandomSource::new(5);
        let n = 5i64;
        let relation = YPoly::monomial(
            fpoly::Monomial::from_pairs((0..2 * n).map(|r| (r, 1))),
            1,
        );
        for _ in 0..5 {
            let value = admissible_evaluation(&relation, n, &mut src);
            assert_eq!(value, rational(1, 1));
        }
    }
}
