//! Polynomials attached to the y-parameters of twisted polygons.
//!
//! The pentagram map's iterates can be written in terms of a family of
//! polynomials `F_{j,k}` in the variables `y_i`.  This module computes them
//! by three independent routes: a recursion with exact division, a sum over
//! order ideals of a family of three-dimensional posets, and a sum over
//! alternating sign matrices.  It also provides the restriction operation
//! `y_i = -1` for `i` in a set `S` and the avoidance analysis that controls
//! when a restricted polynomial vanishes.

use crate::scalar::{Field, ScalarError};
use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet, VecDeque};
use std::fmt;

/// Errors from polynomial and matrix computations.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FpolyError {
    #[error("division left a nonzero remainder")]
    InexactDivision,
    #[error("not an alternating sign matrix: {0}")]
    NotAlternating(String),
    #[error("poset has {0} elements, too many for bitmask enumeration")]
    PosetTooLarge(usize),
    #[error("bit set is not an order ideal")]
    NotAnIdeal,
}

// ---------------------------------------------------------------------------
// Monomials and polynomials.
// ---------------------------------------------------------------------------

/// A monomial in the variables `y_i`: a sorted list of (variable index,
/// exponent) pairs with nonzero exponents.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Monomial(Vec<(i64, i64)>);

impl Monomial {
    pub fn one() -> Self {
        Monomial(Vec::new())
    }

    pub fn var(i: i64) -> Self {
        Monomial(vec![(i, 1)])
    }

    /// Builds a monomial from arbitrary (variable, exponent) pairs, merging
    /// repeats and dropping zero exponents.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (i64, i64)>) -> Self {
        let mut map: BTreeMap<i64, i64> = BTreeMap::new();
        for (v, e) in pairs {
            *map.entry(v).or_insert(0) += e;
        }
        Monomial(map.into_iter().filter(|&(_, e)| e != 0).collect())
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    pub fn pairs(&self) -> &[(i64, i64)] {
        &self.0
    }

    pub fn degree(&self) -> i64 {
        self.0.iter().map(|&(_, e)| e).sum()
    }

    pub fn exponent_of(&self, v: i64) -> i64 {
        self.0
            .binary_search_by_key(&v, |&(w, _)| w)
            .map(|idx| self.0[idx].1)
            .unwrap_or(0)
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        let mut out = Vec::with_capacity(self.0.len() + other.0.len());
        let (mut a, mut b) = (self.0.iter().peekable(), other.0.iter().peekable());
        loop {
            match (a.peek(), b.peek()) {
                (Some(&&(va, ea)), Some(&&(vb, eb))) => {
                    if va < vb {
                        out.push((va, ea));
                        a.next();
                    } else if vb < va {
                        out.push((vb, eb));
                        b.next();
                    } else {
                        if ea + eb != 0 {
                            out.push((va, ea + eb));
                        }
                        a.next();
                        b.next();
                    }
                }
                (Some(_), None) => {
                    out.extend(a.by_ref().copied());
                    break;
                }
                (None, Some(_)) => {
                    out.extend(b.by_ref().copied());
                    break;
                }
                (None, None) => break,
            }
        }
        Monomial(out)
    }

    /// Divides by another monomial; `None` when any resulting exponent would
    /// be negative.
    pub fn try_div(&self, other: &Monomial) -> Option<Monomial> {
        let mut out = Vec::with_capacity(self.0.len());
        let mut a = self.0.iter().peekable();
        for &(vb, eb) in &other.0 {
            loop {
                match a.peek() {
                    Some(&&(va, ea)) if va < vb => {
                        out.push((va, ea));
                        a.next();
                    }
                    Some(&&(va, ea)) if va == vb => {
                        if ea < eb {
                            return None;
                        }
                        if ea > eb {
                            out.push((va, ea - eb));
                        }
                        a.next();
                        break;
                    }
                    _ => return None,
                }
            }
        }
        out.extend(a.copied());
        Some(Monomial(out))
    }
}

/// Graded lexicographic comparison: total degree first, then the exponent of
/// the smallest differing variable index decides (larger exponent wins).
impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        use std::cmp::Ordering;
        match self.degree().cmp(&other.degree()) {
            Ordering::Equal => {}
            ord => return ord,
        }
        let (mut a, mut b) = (self.0.iter().peekable(), other.0.iter().peekable());
        loop {
            match (a.peek(), b.peek()) {
                (Some(&&(va, ea)), Some(&&(vb, eb))) => {
                    if va < vb {
                        return if ea > 0 { Ordering::Greater } else { Ordering::Less };
                    }
                    if vb < va {
                        return if eb > 0 { Ordering::Less } else { Ordering::Greater };
                    }
                    match ea.cmp(&eb) {
                        Ordering::Equal => {
                            a.next();
                            b.next();
                        }
                        ord => return ord,
                    }
                }
                (Some(&&(_, ea)), None) => {
                    return if ea > 0 { Ordering::Greater } else { Ordering::Less }
                }
                (None, Some(&&(_, eb))) => {
                    return if eb > 0 { Ordering::Less } else { Ordering::Greater }
                }
                (None, None) => return Ordering::Equal,
            }
        }
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "1");
        }
        let mut first = true;
        for &(v, e) in &self.0 {
            if !first {
                write!(f, "*")?;
            }
            first = false;
            if e == 1 {
                write!(f, "y[{v}]")?;
            } else {
                write!(f, "y[{v}]^{e}")?;
            }
        }
        Ok(())
    }
}

/// An integer-coefficient polynomial in the variables `y_i`, stored sparsely
/// with no zero coefficients.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct YPoly {
    terms: BTreeMap<Monomial, i64>,
}

impl YPoly {
    pub fn zero() -> Self {
        YPoly::default()
    }

    pub fn one() -> Self {
        YPoly::constant(1)
    }

    pub fn constant(c: i64) -> Self {
        let mut terms = BTreeMap::new();
        if c != 0 {
            terms.insert(Monomial::one(), c);
        }
        YPoly { terms }
    }

    pub fn var(i: i64) -> Self {
        YPoly::monomial(Monomial::var(i), 1)
    }

    pub fn monomial(m: Monomial, c: i64) -> Self {
        let mut terms = BTreeMap::new();
        if c != 0 {
            terms.insert(m, c);
        }
        YPoly { terms }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> &BTreeMap<Monomial, i64> {
        &self.terms
    }

    pub fn coefficient(&self, m: &Monomial) -> i64 {
        self.terms.get(m).copied().unwrap_or(0)
    }

    fn insert_add(&mut self, m: Monomial, c: i64) {
        if c == 0 {
            return;
        }
        let entry = self.terms.entry(m);
        match entry {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let next = *o.get() + c;
                if next == 0 {
                    o.remove();
                } else {
                    *o.get_mut() = next;
                }
            }
        }
    }

    pub fn add(&self, other: &YPoly) -> YPoly {
        let mut out = self.clone();
        for (m, &c) in &other.terms {
            out.insert_add(m.clone(), c);
        }
        out
    }

    pub fn sub(&self, other: &YPoly) -> YPoly {
        let mut out = self.clone();
        for (m, &c) in &other.terms {
            out.insert_add(m.clone(), -c);
        }
        out
    }

    pub fn neg(&self) -> YPoly {
        YPoly {
            terms: self.terms.iter().map(|(m, &c)| (m.clone(), -c)).collect(),
        }
    }

    pub fn mul(&self, other: &YPoly) -> YPoly {
        let mut out = YPoly::zero();
        for (ma, &ca) in &self.terms {
            for (mb, &cb) in &other.terms {
                out.insert_add(ma.mul(mb), ca * cb);
            }
        }
        out
    }

    pub fn mul_monomial(&self, m: &Monomial, c: i64) -> YPoly {
        let mut out = YPoly::zero();
        for (ma, &ca) in &self.terms {
            out.insert_add(ma.mul(m), ca * c);
        }
        out
    }

    /// Exact polynomial division; errors if the divisor does not divide
    /// evenly.  Both operands must have nonnegative exponents.
    pub fn div_exact(&self, divisor: &YPoly) -> Result<YPoly, FpolyError> {
        let Some((dm, &dc)) = divisor.terms.last_key_value() else {
            return Err(FpolyError::InexactDivision);
        };
        let dm = dm.clone();
        let mut rem = self.clone();
        let mut quot = YPoly::zero();
        loop {
            let (qm, qc) = {
                let Some((rm, &rc)) = rem.terms.last_key_value() else {
                    break;
                };
                let qm = rm.try_div(&dm).ok_or(FpolyError::InexactDivision)?;
                if rc % dc != 0 {
                    return Err(FpolyError::InexactDivision);
                }
                (qm, rc / dc)
            };
            for (m, &c) in &divisor.terms {
                rem.insert_add(qm.mul(m), -qc * c);
            }
            quot.insert_add(qm, qc);
        }
        Ok(quot)
    }

    /// Substitutes `y_i = -1` for every `i` in `s`.
    pub fn restrict(&self, s: &BTreeSet<i64>) -> YPoly {
        let mut out = YPoly::zero();
        for (m, &c) in &self.terms {
            let mut coeff = c;
            let mut kept = Vec::with_capacity(m.pairs().len());
            for &(v, e) in m.pairs() {
                if s.contains(&v) {
                    if e.rem_euclid(2) == 1 {
                        coeff = -coeff;
                    }
                } else {
                    kept.push((v, e));
                }
            }
            out.insert_add(Monomial(kept), coeff);
        }
        out
    }

    /// Re-imposes the cyclic identification `y_{i+2n} = y_i`, folding every
    /// variable index into `[0, 2n)`.
    pub fn cyclic_reduce(&self, n: usize) -> YPoly {
        let two_n = 2 * n as i64;
        let mut out = YPoly::zero();
        for (m, &c) in &self.terms {
            let folded = Monomial::from_pairs(
                m.pairs().iter().map(|&(v, e)| (v.rem_euclid(two_n), e)),
            );
            out.insert_add(folded, c);
        }
        out
    }

    /// Evaluates at an assignment of field values to the variables.
    pub fn eval<F: Field>(&self, mut y: impl FnMut(i64) -> F) -> Result<F, ScalarError> {
        let mut total = F::zero();
        for (m, &c) in &self.terms {
            let mut term = F::from_int(c);
            for &(v, e) in m.pairs() {
                let mut base = y(v);
                if e < 0 {
                    base = base.checked_inv()?;
                }
                for _ in 0..e.unsigned_abs() {
                    term = term * base.clone();
                }
            }
            total = total + term;
        }
        Ok(total)
    }

    pub fn variables(&self) -> BTreeSet<i64> {
        self.terms
            .keys()
            .flat_map(|m| m.pairs().iter().map(|&(v, _)| v))
            .collect()
    }

    pub fn all_coefficients_one(&self) -> bool {
        self.terms.values().all(|&c| c == 1)
    }

    /// Canonical text form: terms sorted by their (index, exponent) pair
    /// lists, joined with signs.
    pub fn to_text(&self) -> String {
        if self.terms.is_empty() {
            return "0".to_string();
        }
        let mut keys: Vec<&Monomial> = self.terms.keys().collect();
        keys.sort_by(|a, b| a.pairs().cmp(b.pairs()));
        let mut out = String::new();
        for (idx, m) in keys.iter().enumerate() {
            let c = self.terms[*m];
            let mag = c.unsigned_abs();
            if idx == 0 {
                if c < 0 {
                    out.push_str("- ");
                }
            } else if c < 0 {
                out.push_str(" - ");
            } else {
                out.push_str(" + ");
            }
            if m.is_one() {
                out.push_str(&mag.to_string());
            } else if mag == 1 {
                out.push_str(&m.to_string());
            } else {
                out.push_str(&format!("{mag}*{m}"));
            }
        }
        out
    }
}

impl fmt::Display for YPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_text())
    }
}

impl std::ops::AddAssign<&YPoly> for YPoly {
    fn add_assign(&mut self, other: &YPoly) {
        for (m, &c) in &other.terms {
            self.insert_add(m.clone(), c);
        }
    }
}

// ---------------------------------------------------------------------------
// The posets behind the order-ideal formula.
// ---------------------------------------------------------------------------

/// An element of the three-parameter posets.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PosetElt {
    pub r: i64,
    pub s: i64,
    pub t: i64,
}

/// The elements (r, s, t) with |r|+|s| <= k-2, r+s of the same parity as k,
/// and t running through an arithmetic progression of step 4 determined by
/// (r, s).
pub fn poset_q(k: i64) -> Vec<PosetElt> {
    let mut out = Vec::new();
    if k < 2 {
        return out;
    }
    let bound = k - 2;
    for r in -bound..=bound {
        let rest = bound - r.abs();
        for s in -rest..=rest {
            if (r + s - k).rem_euclid(2) != 0 {
                continue;
            }
            let lo = 2 * s.abs() - k + 2;
            let hi = k - 2 - 2 * r.abs();
            let mut t = lo;
            while t <= hi {
                out.push(PosetElt { r, s, t });
                t += 4;
            }
        }
    }
    out.sort();
    out
}

/// Bit rows wide enough for any poset used here.
type BitRow = Vec<u64>;

fn bitrow_new(words: usize) -> BitRow {
    vec![0; words]
}

fn bitrow_set(row: &mut BitRow, i: usize) {
    row[i / 64] |= 1 << (i % 64);
}

fn bitrow_get(row: &BitRow, i: usize) -> bool {
    row[i / 64] >> (i % 64) & 1 == 1
}

fn bitrow_or(dst: &mut BitRow, src: &BitRow) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d |= s;
    }
}

/// A finite poset given by its elements and covering relation, with the
/// derived strictly-below relation cached.
#[derive(Clone, Debug)]
pub struct Poset {
    elts: Vec<PosetElt>,
    covers: Vec<(usize, usize)>,
    below: Vec<BitRow>,
}

impl Poset {
    /// Builds a poset from covers (pairs (lower, upper)); the strictly-below
    /// relation is the transitive closure.
    pub fn new(elts: Vec<PosetElt>, covers: Vec<(usize, usize)>) -> Poset {
        let n = elts.len();
        let words = n.div_ceil(64);
        let mut below = vec![bitrow_new(words); n];
        // Covers increase t by one, so t-ascending order is topological; for
        // hand-built posets fall back to fixpoint iteration.
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by_key(|&i| elts[i].t);
        let mut changed = true;
        while changed {
            changed = false;
            for &u in &order {
                for &(lo, hi) in &covers {
                    if hi == u {
                        let mut add = below[lo].clone();
                        bitrow_set(&mut add, lo);
                        let before = below[u].clone();
                        bitrow_or(&mut below[u], &add);
                        if below[u] != before {
                            changed = true;
                        }
                    }
                }
            }
        }
        Poset {
            elts,
            covers,
            below,
        }
    }

    /// Restriction to a subset of the elements, keeping the induced order.
    /// Covers are recomputed as the transitive reduction.
    pub fn induced(&self, keep: &[usize]) -> Poset {
        let elts: Vec<PosetElt> = keep.iter().map(|&i| self.elts[i]).collect();
        let n = keep.len();
        let words = n.div_ceil(64);
        let mut below = vec![bitrow_new(words); n];
        for (bi, &pi) in keep.iter().enumerate() {
            for (bj, &pj) in keep.iter().enumerate() {
                if bi != bj && bitrow_get(&self.below[pi], pj) {
                    bitrow_set(&mut below[bi], bj);
                }
            }
        }
        let mut covers = Vec::new();
        for hi in 0..n {
            'lo: for lo in 0..n {
                if !bitrow_get(&below[hi], lo) {
                    continue;
                }
                for mid in 0..n {
                    if bitrow_get(&below[hi], mid) && bitrow_get(&below[mid], lo) {
                        continue 'lo;
                    }
                }
                covers.push((lo, hi));
            }
        }
        covers.sort();
        Poset {
            elts,
            covers,
            below,
        }
    }

    pub fn len(&self) -> usize {
        self.elts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elts.is_empty()
    }

    pub fn elements(&self) -> &[PosetElt] {
        &self.elts
    }

    pub fn covers(&self) -> &[(usize, usize)] {
        &self.covers
    }

    pub fn index_of(&self, e: &PosetElt) -> Option<usize> {
        self.elts.binary_search(e).ok()
    }

    pub fn strictly_below(&self, upper: usize, lower: usize) -> bool {
        bitrow_get(&self.below[upper], lower)
    }

    /// Strictly-below set of an element as a bitmask (poset must fit 128
    /// bits).
    fn below_mask(&self, i: usize) -> u128 {
        let mut m = 0u128;
        for j in 0..self.len() {
            if bitrow_get(&self.below[i], j) {
                m |= 1 << j;
            }
        }
        m
    }

    /// All order ideals (downward-closed subsets) as bitmasks, sorted.
    pub fn order_ideals(&self) -> Result<Vec<u128>, FpolyError> {
        let n = self.len();
        if n > 128 {
            return Err(FpolyError::PosetTooLarge(n));
        }
        let below: Vec<u128> = (0..n).map(|i| self.below_mask(i)).collect();
        let mut seen: HashSet<u128> = HashSet::new();
        let mut queue: VecDeque<u128> = VecDeque::new();
        seen.insert(0);
        queue.push_back(0);
        while let Some(ideal) = queue.pop_front() {
            for e in 0..n {
                if ideal >> e & 1 == 0 && below[e] & !ideal == 0 {
                    let next = ideal | 1 << e;
                    if seen.insert(next) {
                        queue.push_back(next);
                    }
                }
            }
        }
        let mut out: Vec<u128> = seen.into_iter().collect();
        out.sort_unstable();
        Ok(out)
    }

    /// Checks that a bitmask is downward closed.
    pub fn is_ideal(&self, mask: u128) -> bool {
        for e in 0..self.len() {
            if mask >> e & 1 == 1 && self.below_mask(e) & !mask != 0 {
                return false;
            }
        }
        true
    }
}

/// The poset on the disjoint union of the level-(k+1) and level-k element
/// sets, ordered by the covering rule: (r', s', t') covers (r, s, t) when
/// t' = t + 1 and the (r, s) step is one unit.
pub fn poset_p(k: i64) -> Poset {
    let mut elts = poset_q(k + 1);
    elts.extend(poset_q(k));
    elts.sort();
    let mut covers = Vec::new();
    for (lo, a) in elts.iter().enumerate() {
        for (hi, b) in elts.iter().enumerate() {
            if b.t == a.t + 1 && (b.r - a.r).abs() + (b.s - a.s).abs() == 1 {
                covers.push((lo, hi));
            }
        }
    }
    Poset::new(elts, covers)
}

/// The level-k element set with the order induced from the containing poset.
pub fn poset_q_induced(k: i64) -> Poset {
    let p = poset_p(k);
    let q: BTreeSet<PosetElt> = poset_q(k).into_iter().collect();
    let keep: Vec<usize> = (0..p.len()).filter(|&i| q.contains(&p.elements()[i])).collect();
    p.induced(&keep)
}

// ---------------------------------------------------------------------------
// The recursive and order-ideal routes to F.
// ---------------------------------------------------------------------------

/// The monomial `M_{j,k}`: the product of `y_{3i+j}` for `i` from `-k` to
/// `k`.
pub fn m_monomial(j: i64, k: i64) -> Monomial {
    Monomial::from_pairs((-k..=k).map(|i| (3 * i + j, 1)))
}

fn f_rec_memo(j: i64, k: i64, memo: &mut HashMap<(i64, i64), YPoly>) -> YPoly {
    if k <= 0 {
        return YPoly::one();
    }
    if let Some(hit) = memo.get(&(j, k)) {
        return hit.clone();
    }
    let a = f_rec_memo(j - 3, k - 1, memo);
    let b = f_rec_memo(j + 3, k - 1, memo);
    let c = f_rec_memo(j - 1, k - 1, memo);
    let d = f_rec_memo(j + 1, k - 1, memo);
    let denom = f_rec_memo(j, k - 2, memo);
    let numer = a.mul(&b).add(&c.mul(&d).mul_monomial(&m_monomial(j, k - 1), 1));
    let out = numer
        .div_exact(&denom)
        .expect("recursion division left a remainder");
    memo.insert((j, k), out.clone());
    out
}

/// `F_{j,k}` by the recursion `F_{j,k+1} F_{j,k-1} = F_{j-3,k} F_{j+3,k} +
/// M_{j,k} F_{j-1,k} F_{j+1,k}` with exact division at each step.
pub fn f_recursive(j: i64, k: i64) -> YPoly {
    let mut memo = HashMap::new();
    f_rec_memo(j, k, &mut memo)
}

/// Memoized access to the recursive route, for callers that need many
/// `(j, k)` pairs.  Levels at or below zero give the constant one.
#[derive(Debug, Default)]
pub struct FCache {
    memo: HashMap<(i64, i64), YPoly>,
}

impl FCache {
    pub fn new() -> FCache {
        FCache::default()
    }

    /// The polynomial at doubled index `j` and level `k`.
    pub fn get(&mut self, j: i64, k: i64) -> YPoly {
        f_rec_memo(j, k, &mut self.memo)
    }
}

/// `F_{j,k}` as a sum over order ideals: each ideal contributes the product
/// of `y_{3r+s+j}` over its elements.
pub fn f_ideal(j: i64, k: i64) -> YPoly {
    let p = poset_p(k);
    let ideals = p
        .order_ideals()
        .expect("order-ideal route only supports desk-scale k");
    let mut out = YPoly::zero();
    for mask in ideals {
        let m = Monomial::from_pairs(
            (0..p.len())
                .filter(|&e| mask >> e & 1 == 1)
                .map(|e| {
                    let elt = p.elements()[e];
                    (3 * elt.r + elt.s + j, 1)
                }),
        );
        out.insert_add(m, 1);
    }
    out
}

// ---------------------------------------------------------------------------
// Alternating sign matrices.
// ---------------------------------------------------------------------------

/// A square matrix over {-1, 0, 1} whose rows and columns alternate in sign
/// and sum to one.  Entry coordinates are 1-based throughout.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Asm {
    k: usize,
    entries: Vec<i8>,
}

impl Asm {
    pub fn new(k: usize, entries: Vec<i8>) -> Result<Asm, FpolyError> {
        if entries.len() != k * k {
            return Err(FpolyError::NotAlternating(format!(
                "expected {} entries, got {}",
                k * k,
                entries.len()
            )));
        }
        let a = Asm { k, entries };
        for i in 1..=k {
            let mut sum = 0i32;
            for l in 1..=k {
                sum += a.entry(i, l) as i32;
                if !(0..=1).contains(&sum) {
                    return Err(FpolyError::NotAlternating(format!(
                        "row {i} partial sums leave {{0, 1}}"
                    )));
                }
            }
            if sum != 1 {
                return Err(FpolyError::NotAlternating(format!("row {i} sums to {sum}")));
            }
        }
        for l in 1..=k {
            let mut sum = 0i32;
            for i in 1..=k {
                sum += a.entry(i, l) as i32;
                if !(0..=1).contains(&sum) {
                    return Err(FpolyError::NotAlternating(format!(
                        "column {l} partial sums leave {{0, 1}}"
                    )));
                }
            }
            if sum != 1 {
                return Err(FpolyError::NotAlternating(format!(
                    "column {l} sums to {sum}"
                )));
            }
        }
        Ok(a)
    }

    pub fn identity(k: usize) -> Asm {
        let mut entries = vec![0i8; k * k];
        for i in 0..k {
            entries[i * k + i] = 1;
        }
        Asm { k, entries }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Entry at 1-based (row, column).
    pub fn entry(&self, i: usize, l: usize) -> i8 {
        assert!((1..=self.k).contains(&i) && (1..=self.k).contains(&l));
        self.entries[(i - 1) * self.k + (l - 1)]
    }

    /// 1-based positions of the entries equal to 1, in row-major order.
    pub fn ones(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 1..=self.k {
            for l in 1..=self.k {
                if self.entry(i, l) == 1 {
                    out.push((i, l));
                }
            }
        }
        out
    }

    /// Corner-sum matrix: `C(i, j)` counts the entries in the top-left
    /// `i` by `j` block, for `i, j` in `0..=k`.
    fn corner_sums(&self) -> Vec<Vec<i64>> {
        let k = self.k;
        let mut c = vec![vec![0i64; k + 1]; k + 1];
        for i in 1..=k {
            for j in 1..=k {
                c[i][j] =
                    c[i - 1][j] + c[i][j - 1] - c[i - 1][j - 1] + self.entry(i, j) as i64;
            }
        }
        c
    }
}

impl fmt::Display for Asm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 1..=self.k {
            for l in 1..=self.k {
                if l > 1 {
                    write!(f, " ")?;
                }
                write!(f, "{:2}", self.entry(i, l))?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// The variable index attached to the matrix position (i, l), 1-based:
/// `j + 2i + 4l - 3k - 3`.
pub fn array_value(j: i64, k: i64, i: usize, l: usize) -> i64 {
    j + 2 * i as i64 + 4 * l as i64 - 3 * k - 3
}

/// Enumerates alternating sign matrices row by row, with an arbitrary
/// predicate restricting where entries equal to 1 may appear.
fn asm_search(k: usize, allowed_one: &dyn Fn(usize, usize) -> bool) -> Vec<Asm> {
    let mut out = Vec::new();
    let mut entries = vec![0i8; k * k];
    let mut col_sums = vec![0i8; k];
    fn rec(
        k: usize,
        cell: usize,
        row_sum: i8,
        entries: &mut Vec<i8>,
        col_sums: &mut Vec<i8>,
        allowed_one: &dyn Fn(usize, usize) -> bool,
        out: &mut Vec<Asm>,
    ) {
        if cell == k * k {
            if col_sums.iter().all(|&c| c == 1) {
                out.push(Asm {
                    k,
                    entries: entries.clone(),
                });
            }
            return;
        }
        let (row, col) = (cell / k, cell % k);
        for e in [0i8, 1, -1] {
            let rs = row_sum + e;
            let cs = col_sums[col] + e;
            if !(0..=1).contains(&rs) || !(0..=1).contains(&cs) {
                continue;
            }
            if e == 1 && !allowed_one(row + 1, col + 1) {
                continue;
            }
            if col == k - 1 && rs != 1 {
                continue;
            }
            entries[cell] = e;
            col_sums[col] = cs;
            let next_row_sum = if col == k - 1 { 0 } else { rs };
            rec(k, cell + 1, next_row_sum, entries, col_sums, allowed_one, out);
            entries[cell] = 0;
            col_sums[col] -= e;
        }
    }
    rec(k, 0, 0, &mut entries, &mut col_sums, allowed_one, &mut out);
    out
}

/// All alternating sign matrices of size k.
pub fn asm_enumerate(k: usize) -> Vec<Asm> {
    asm_search(k, &|_, _| true)
}

/// The matrices avoiding (S, j): no entry equal to 1 may sit at a position
/// whose attached variable index lies in S.  The search prunes on placement,
/// so this stays fast even when the full matrix count is large.
pub fn asm_enumerate_avoiding(k: usize, s: &BTreeSet<i64>, j: i64) -> Vec<Asm> {
    let ki = k as i64;
    asm_search(k, &|i, l| !s.contains(&array_value(j, ki, i, l)))
}

/// Whether no 1-entry of the matrix sits at a variable index in S.
pub fn avoids(a: &Asm, s: &BTreeSet<i64>, j: i64) -> bool {
    let k = a.k() as i64;
    a.ones()
        .iter()
        .all(|&(i, l)| !s.contains(&array_value(j, k, i, l)))
}

// ---------------------------------------------------------------------------
// The correspondence between matrices and order ideals.
// ---------------------------------------------------------------------------

/// Shared tables for converting between size-k alternating sign matrices and
/// ideals of the level-k poset, including the cross-level order data used to
/// build minimal compatible partners.
pub struct AsmContext {
    k: i64,
    q_k: Poset,
    q_k1: Poset,
    /// For each element of the level-k poset: the level-(k+1) elements
    /// strictly below it, as a mask over `q_k1` indices.
    below_in_k1: Vec<u128>,
    /// For each element of the level-(k+1) poset: the level-k elements
    /// strictly below it, as a mask over `q_k` indices.
    below_in_k: Vec<u128>,
    /// Element indices of each poset grouped by (r, s), sorted by t.
    columns_k: BTreeMap<(i64, i64), Vec<usize>>,
    columns_k1: BTreeMap<(i64, i64), Vec<usize>>,
}

fn columns_of(p: &Poset) -> BTreeMap<(i64, i64), Vec<usize>> {
    let mut cols: BTreeMap<(i64, i64), Vec<usize>> = BTreeMap::new();
    for (idx, e) in p.elements().iter().enumerate() {
        cols.entry((e.r, e.s)).or_default().push(idx);
    }
    for list in cols.values_mut() {
        list.sort_by_key(|&i| p.elements()[i].t);
    }
    cols
}

impl AsmContext {
    pub fn new(k: i64) -> AsmContext {
        assert!(k >= 1, "matrix size must be positive");
        let p = poset_p(k);
        let q_k = poset_q_induced(k);
        let q_k1 = poset_q_induced(k + 1);
        assert!(
            q_k.len() <= 128 && q_k1.len() <= 128,
            "ideal bitmasks support only posets up to 128 elements"
        );
        let p_index: HashMap<PosetElt, usize> = p
            .elements()
            .iter()
            .enumerate()
            .map(|(i, &e)| (e, i))
            .collect();
        let q_k_pidx: Vec<usize> = q_k.elements().iter().map(|e| p_index[e]).collect();
        let q_k1_pidx: Vec<usize> = q_k1.elements().iter().map(|e| p_index[e]).collect();
        let below_in_k1 = q_k_pidx
            .iter()
            .map(|&pi| {
                let mut mask = 0u128;
                for (bj, &pj) in q_k1_pidx.iter().enumerate() {
                    if p.strictly_below(pi, pj) {
                        mask |= 1 << bj;
                    }
                }
                mask
            })
            .collect();
        let below_in_k = q_k1_pidx
            .iter()
            .map(|&pi| {
                let mut mask = 0u128;
                for (bj, &pj) in q_k_pidx.iter().enumerate() {
                    if p.strictly_below(pi, pj) {
                        mask |= 1 << bj;
                    }
                }
                mask
            })
            .collect();
        let columns_k = columns_of(&q_k);
        let columns_k1 = columns_of(&q_k1);
        AsmContext {
            k,
            q_k,
            q_k1,
            below_in_k1,
            below_in_k,
            columns_k,
            columns_k1,
        }
    }

    pub fn k(&self) -> i64 {
        self.k
    }

    pub fn level_poset(&self) -> &Poset {
        &self.q_k
    }

    pub fn next_level_poset(&self) -> &Poset {
        &self.q_k1
    }

    fn poset_for(&self, size: usize) -> (&Poset, &BTreeMap<(i64, i64), Vec<usize>>) {
        if size as i64 == self.k {
            (&self.q_k, &self.columns_k)
        } else if size as i64 == self.k + 1 {
            (&self.q_k1, &self.columns_k1)
        } else {
            panic!("matrix size {size} does not match context level {}", self.k);
        }
    }

    /// The order ideal corresponding to a matrix, as a bitmask over the
    /// elements of the appropriate poset.  Uses the corner-sum height
    /// correspondence: the height above its minimum at an interior grid
    /// point determines how many elements of that point's column belong to
    /// the ideal.
    pub fn asm_to_ideal(&self, a: &Asm) -> u128 {
        let k = a.k() as i64;
        let (poset, columns) = self.poset_for(a.k());
        let c = a.corner_sums();
        let mut mask = 0u128;
        for i in 1..k {
            for j in 1..k {
                let h = i + j - 2 * c[i as usize][j as usize];
                let u = (h - (i - j).abs()) / 2;
                let col = columns
                    .get(&(i + j - k, j - i))
                    .expect("interior grid point has a poset column");
                assert!(
                    (0..=col.len() as i64).contains(&u),
                    "height out of range for column"
                );
                for &e in col.iter().take(u as usize) {
                    mask |= 1 << e;
                }
            }
        }
        debug_assert!(poset.is_ideal(mask), "matrix mapped to a non-ideal");
        mask
    }

    /// Inverse of [`Self::asm_to_ideal`]: rebuilds the matrix whose height
    /// function realizes the given ideal.
    pub fn ideal_to_asm(&self, size: usize, mask: u128) -> Result<Asm, FpolyError> {
        let (poset, columns) = self.poset_for(size);
        if !poset.is_ideal(mask) {
            return Err(FpolyError::NotAnIdeal);
        }
        let k = size as i64;
        let mut h = vec![vec![0i64; size + 1]; size + 1];
        for i in 0..=k {
            for j in 0..=k {
                h[i as usize][j as usize] = if i == 0 {
                    j
                } else if j == 0 {
                    i
                } else if i == k {
                    k - j
                } else if j == k {
                    k - i
                } else {
                    let col = columns
                        .get(&(i + j - k, j - i))
                        .expect("interior grid point has a poset column");
                    let mut u = 0i64;
                    for &e in col {
                        if mask >> e & 1 == 1 {
                            u += 1;
                        } else {
                            break;
                        }
                    }
                    // A column intersected with an ideal must be a prefix.
                    if col.iter().skip(u as usize).any(|&e| mask >> e & 1 == 1) {
                        return Err(FpolyError::NotAnIdeal);
                    }
                    (i - j).abs() + 2 * u
                };
            }
        }
        let mut entries = vec![0i8; size * size];
        for i in 1..=size {
            for l in 1..=size {
                let c = |a: usize, b: usize| (a as i64 + b as i64 - h[a][b]) / 2;
                let v = c(i, l) - c(i - 1, l) - c(i, l - 1) + c(i - 1, l - 1);
                entries[(i - 1) * size + (l - 1)] = v as i8;
            }
        }
        Asm::new(size, entries)
    }

    /// The minimal size-(k+1) matrix compatible with `a`: its ideal is the
    /// set of next-level elements lying below some element of `a`'s ideal.
    pub fn b0(&self, a: &Asm) -> Asm {
        assert_eq!(a.k() as i64, self.k);
        let ideal = self.asm_to_ideal(a);
        let mut d = 0u128;
        for e in 0..self.q_k.len() {
            if ideal >> e & 1 == 1 {
                d |= self.below_in_k1[e];
            }
        }
        self.ideal_to_asm(a.k() + 1, d)
            .expect("minimal compatible ideal failed to convert")
    }

    /// Whether the ideals of `a` (size k) and `b` (size k+1) unite to an
    /// ideal of the two-level poset.
    pub fn compatible(&self, a: &Asm, b: &Asm) -> bool {
        let ia = self.asm_to_ideal(a);
        let jb = self.asm_to_ideal(b);
        for e in 0..self.q_k.len() {
            if ia >> e & 1 == 1 && self.below_in_k1[e] & !jb != 0 {
                return false;
            }
        }
        for e in 0..self.q_k1.len() {
            if jb >> e & 1 == 1 && self.below_in_k[e] & !ia != 0 {
                return false;
            }
        }
        true
    }

    /// The weight monomial of a matrix: the product of `y_{3r+s+j}` over the
    /// elements of its ideal.
    pub fn wt(&self, a: &Asm, j: i64) -> Monomial {
        let (poset, _) = self.poset_for(a.k());
        let ideal = self.asm_to_ideal(a);
        Monomial::from_pairs((0..poset.len()).filter(|&e| ideal >> e & 1 == 1).map(|e| {
            let elt = poset.elements()[e];
            (3 * elt.r + elt.s + j, 1)
        }))
    }
}

/// The order ideal of a matrix (standalone convenience; builds the tables).
pub fn asm_to_ideal(a: &Asm) -> u128 {
    AsmContext::new(a.k() as i64).asm_to_ideal(a)
}

/// The minimal compatible next-size matrix (standalone convenience).
pub fn b0(a: &Asm) -> Asm {
    AsmContext::new(a.k() as i64).b0(a)
}

/// The weight monomial of a matrix with respect to `j`.
pub fn wt(a: &Asm, j: i64) -> Monomial {
    let k = a.k() as i64;
    let ctx = if a.k() >= 1 {
        AsmContext::new(k)
    } else {
        panic!("weight needs a positive matrix size")
    };
    ctx.wt(a, j)
}

/// All compatible pairs (A, B) with A of size k and B of size k+1; in
/// bijection with the ideals of the two-level poset.
pub fn compatible_pairs(k: usize) -> Vec<(Asm, Asm)> {
    let ctx = AsmContext::new(k as i64);
    let asms_k = asm_enumerate(k);
    let asms_k1 = asm_enumerate(k + 1);
    let mut out = Vec::new();
    for a in &asms_k {
        for b in &asms_k1 {
            if ctx.compatible(a, b) {
                out.push((a.clone(), b.clone()));
            }
        }
    }
    out
}

/// `F_{j,k}` as a sum over size-k alternating sign matrices: each matrix
/// contributes its weight, the weight of its minimal compatible partner, and
/// a factor `1 + y` for every entry equal to 1.
pub fn f_asm(j: i64, k: i64) -> YPoly {
    assert!(k >= 1);
    let ctx = AsmContext::new(k);
    let mut out = YPoly::zero();
    for a in asm_enumerate(k as usize) {
        out += &asm_term(&ctx, &a, j, &BTreeSet::new());
    }
    out
}

/// The restriction of `F_{j,k}` to `y_i = -1` for `i` in `s`, computed
/// directly from the avoiding matrices (terms with a forbidden 1-entry
/// vanish, so the search never visits them).
pub fn f_asm_restricted(j: i64, k: i64, s: &BTreeSet<i64>) -> YPoly {
    assert!(k >= 1);
    let ctx = AsmContext::new(k);
    let mut out = YPoly::zero();
    for a in asm_enumerate_avoiding(k as usize, s, j) {
        out += &asm_term(&ctx, &a, j, s);
    }
    out
}

fn asm_term(ctx: &AsmContext, a: &Asm, j: i64, s: &BTreeSet<i64>) -> YPoly {
    let k = a.k() as i64;
    let b = ctx.b0(a);
    let weight = ctx.wt(a, j).mul(&ctx.wt(&b, j));
    let mut term = YPoly::monomial(weight, 1);
    if !s.is_empty() {
        term = term.restrict(s);
    }
    for (i, l) in a.ones() {
        let v = array_value(j, k, i, l);
        let factor = if s.contains(&v) {
            YPoly::zero()
        } else {
            YPoly::one().add(&YPoly::var(v))
        };
        term = term.mul(&factor);
    }
    term
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::rational;
    use num_traits::Zero;

    fn y(i: i64) -> YPoly {
        YPoly::var(i)
    }

    fn one_plus(i: i64) -> YPoly {
        YPoly::one().add(&y(i))
    }

    fn binom3(n: i64) -> usize {
        if n < 3 {
            0
        } else {
            (n * (n - 1) * (n - 2) / 6) as usize
        }
    }

    #[test]
    fn poset_sizes_match_binomial_counts() {
        for k in 0..=8i64 {
            assert_eq!(poset_q(k).len(), binom3(k + 1), "level {k}");
        }
        assert_eq!(poset_p(2).len(), 5);
        assert_eq!(poset_p(3).len(), 14);
        assert_eq!(poset_p(4).len(), 30);
        assert_eq!(poset_p(5).len(), 55);
        assert_eq!(poset_p(7).len(), 140);
    }

    #[test]
    fn two_level_poset_hasse_diagram_is_the_expected_x_shape() {
        let p = poset_p(2);
        let elt = |r, s, t| PosetElt { r, s, t };
        let idx = |e: PosetElt| p.index_of(&e).unwrap();
        let expected: BTreeSet<(usize, usize)> = [
            (idx(elt(-1, 0, -1)), idx(elt(0, 0, 0))),
            (idx(elt(1, 0, -1)), idx(elt(0, 0, 0))),
            (idx(elt(0, 0, 0)), idx(elt(0, -1, 1))),
            (idx(elt(0, 0, 0)), idx(elt(0, 1, 1))),
        ]
        .into_iter()
        .collect();
        let actual: BTreeSet<(usize, usize)> = p.covers().iter().copied().collect();
        assert_eq!(actual, expected);
    }

    #[test]
    fn ideal_counts_match_known_values() {
        let expected_p = [(1i64, 2usize), (2, 8), (3, 64), (4, 1024), (5, 32768)];
        for (k, count) in expected_p {
            assert_eq!(
                poset_p(k).order_ideals().unwrap().len(),
                count,
                "two-level poset at {k}"
            );
        }
        let expected_q = [(1i64, 1usize), (2, 2), (3, 7), (4, 42), (5, 429)];
        for (k, count) in expected_q {
            assert_eq!(
                poset_q_induced(k).order_ideals().unwrap().len(),
                count,
                "level poset at {k}"
            );
        }
    }

    #[test]
    fn ideals_of_a_chain_count_length_plus_one() {
        let elts: Vec<PosetElt> = (0..6).map(|t| PosetElt { r: 0, s: 0, t }).collect();
        let covers: Vec<(usize, usize)> = (0..5).map(|i| (i, i + 1)).collect();
        let chain = Poset::new(elts, covers);
        assert_eq!(chain.order_ideals().unwrap().len(), 7);
    }

    #[test]
    fn recursive_f_base_cases_and_small_values() {
        assert_eq!(f_recursive(4, -1), YPoly::one());
        assert_eq!(f_recursive(4, 0), YPoly::one());
        assert_eq!(f_recursive(7, 1), one_plus(7));
        let j = 2;
        let expected = one_plus(j - 3).mul(&one_plus(j + 3)).add(
            &y(j - 3)
                .mul(&y(j))
                .mul(&y(j + 3))
                .mul(&one_plus(j - 1))
                .mul(&one_plus(j + 1)),
        );
        let f2 = f_recursive(j, 2);
        assert_eq!(f2, expected);
        assert_eq!(f2.term_count(), 8);
    }

    #[test]
    fn three_routes_agree_for_small_levels() {
        for j in [-1i64, 0, 2] {
            for k in 1..=4i64 {
                let rec = f_recursive(j, k);
                let ideal = f_ideal(j, k);
                let asm = f_asm(j, k);
                assert_eq!(rec, ideal, "recursive vs ideal at ({j}, {k})");
                assert_eq!(rec, asm, "recursive vs matrix-sum at ({j}, {k})");
            }
        }
    }

    #[test]
    fn recursive_and_ideal_routes_agree_at_level_five() {
        let rec = f_recursive(0, 5);
        let ideal = f_ideal(0, 5);
        assert_eq!(rec, ideal);
        let total: i64 = rec.terms().values().sum();
        assert_eq!(total, 32768);
        assert_eq!(rec.term_count(), 19968);
    }

    #[test]
    fn f_coefficients_are_positive_and_sum_to_ideal_counts() {
        // Distinct ideals can contribute the same monomial (the variable
        // index 3r + s + j ignores t and collides across columns), so
        // coefficients larger than one appear from level three onward.  The
        // faithful invariant is positivity plus total weight.
        for k in 1..=4i64 {
            let f = f_recursive(0, k);
            assert!(f.terms().values().all(|&c| c >= 1), "level {k}");
            let total: i64 = f.terms().values().sum();
            assert_eq!(
                total as usize,
                poset_p(k).order_ideals().unwrap().len(),
                "level {k}"
            );
        }
        assert!(f_recursive(0, 2).all_coefficients_one());
        assert!(!f_recursive(0, 3).all_coefficients_one());
    }

    #[test]
    fn f_variables_stay_in_the_expected_window() {
        for j in [0i64, 5] {
            for k in 1..=4i64 {
                let f = f_recursive(j, k);
                for v in f.variables() {
                    assert!(
                        (j - 3 * (k - 1)..=j + 3 * (k - 1)).contains(&v),
                        "variable {v} outside window at ({j}, {k})"
                    );
                }
            }
        }
    }

    #[test]
    fn division_is_exact_only_when_it_divides() {
        let p = one_plus(0).mul(&one_plus(1));
        assert_eq!(p.div_exact(&one_plus(0)).unwrap(), one_plus(1));
        let err = one_plus(0).add(&y(2)).div_exact(&one_plus(1)).unwrap_err();
        assert_eq!(err, FpolyError::InexactDivision);
    }

    #[test]
    fn matrix_counts_match_known_values() {
        let expected = [(1usize, 1usize), (2, 2), (3, 7), (4, 42), (5, 429)];
        for (k, count) in expected {
            assert_eq!(asm_enumerate(k).len(), count, "size {k}");
        }
    }

    #[test]
    fn matrix_validation_rejects_bad_input() {
        assert!(Asm::new(2, vec![1, 0, 0, 1]).is_ok());
        assert!(Asm::new(2, vec![1, 0, 0, -1]).is_err());
        assert!(Asm::new(2, vec![1, 1, 0, 0]).is_err());
        assert!(Asm::new(3, vec![0, 1, 0, 1, -1, 1, 0, 1, 0]).is_ok());
    }

    #[test]
    fn matrix_ideal_correspondence_is_a_bijection() {
        for k in 1..=4i64 {
            let ctx = AsmContext::new(k);
            let asms = asm_enumerate(k as usize);
            let ideals = poset_q_induced(k).order_ideals().unwrap();
            let mapped: BTreeSet<u128> = asms.iter().map(|a| ctx.asm_to_ideal(a)).collect();
            assert_eq!(mapped.len(), asms.len(), "injective at {k}");
            let all: BTreeSet<u128> = ideals.into_iter().collect();
            assert_eq!(mapped, all, "surjective at {k}");
            for a in &asms {
                let back = ctx.ideal_to_asm(k as usize, ctx.asm_to_ideal(a)).unwrap();
                assert_eq!(&back, a, "round trip at {k}");
            }
        }
    }

    #[test]
    fn identity_and_antidiagonal_map_to_extreme_ideals() {
        let ctx = AsmContext::new(2);
        assert_eq!(ctx.asm_to_ideal(&Asm::identity(2)), 0);
        let anti = Asm::new(2, vec![0, 1, 1, 0]).unwrap();
        let full = (1u128 << poset_q_induced(2).len()) - 1;
        assert_eq!(ctx.asm_to_ideal(&anti), full);
    }

    #[test]
    fn compatible_partners_form_a_power_of_two_interval() {
        for k in 1..=3i64 {
            let ctx = AsmContext::new(k);
            let asms_k1 = asm_enumerate(k as usize + 1);
            for a in asm_enumerate(k as usize) {
                let ones = a.ones();
                let m = ones.len();
                let partners: Vec<u128> = asms_k1
                    .iter()
                    .filter(|b| ctx.compatible(&a, b))
                    .map(|b| ctx.asm_to_ideal(b))
                    .collect();
                assert_eq!(partners.len(), 1 << m, "count at size {k}");
                let bottom = partners.iter().fold(!0u128, |acc, &p| acc & p);
                let top = partners.iter().fold(0u128, |acc, &p| acc | p);
                assert_eq!(bottom, ctx.asm_to_ideal(&ctx.b0(&a)), "minimal partner");
                let extra = top & !bottom;
                assert_eq!(extra.count_ones() as usize, m, "interval width");
                for &p in &partners {
                    assert_eq!(p & !top, 0);
                    assert_eq!(bottom & !p, 0);
                }
                // The extra elements sit at the (r, s) pairs determined by
                // the positions of the 1-entries.
                let poset = ctx.next_level_poset();
                let mut from_ideal: Vec<(i64, i64)> = (0..poset.len())
                    .filter(|&e| extra >> e & 1 == 1)
                    .map(|e| {
                        let elt = poset.elements()[e];
                        (elt.r, elt.s)
                    })
                    .collect();
                let mut from_ones: Vec<(i64, i64)> = ones
                    .iter()
                    .map(|&(i, l)| (i as i64 + l as i64 - k - 1, l as i64 - i as i64))
                    .collect();
                from_ideal.sort();
                from_ones.sort();
                assert_eq!(from_ideal, from_ones, "coordinate map at size {k}");
            }
        }
    }

    #[test]
    fn compatible_pair_count_matches_two_level_ideals() {
        for k in 1..=3usize {
            let pairs = compatible_pairs(k);
            let ideals = poset_p(k as i64).order_ideals().unwrap().len();
            assert_eq!(pairs.len(), ideals, "size {k}");
        }
    }

    #[test]
    fn corner_swap_difference_sets_have_one_element_per_position() {
        for k in [3i64, 5] {
            let ctx = AsmContext::new(k);
            let ku = k as usize;
            for a in asm_enumerate(ku) {
                if a.entry(1, 1) != 1 || a.entry(ku, ku) != 1 {
                    continue;
                }
                assert_eq!(a.entry(1, ku), 0);
                assert_eq!(a.entry(ku, 1), 0);
                let mut entries: Vec<i8> = (1..=ku)
                    .flat_map(|i| (1..=ku).map(move |l| (i, l)))
                    .map(|(i, l)| a.entry(i, l))
                    .collect();
                entries[0] = 0;
                entries[ku * ku - 1] = 0;
                entries[ku - 1] = 1;
                entries[ku * (ku - 1)] = 1;
                let a2 = Asm::new(ku, entries).unwrap();
                let (i1, i2) = (ctx.asm_to_ideal(&a), ctx.asm_to_ideal(&a2));
                assert_eq!(i1 & !i2, 0, "ideal containment at {k}");
                let diff = i2 & !i1;
                let poset = ctx.level_poset();
                let positions: Vec<(i64, i64)> = (0..poset.len())
                    .filter(|&e| diff >> e & 1 == 1)
                    .map(|e| (poset.elements()[e].r, poset.elements()[e].s))
                    .collect();
                let mut expected: Vec<(i64, i64)> = Vec::new();
                for r in -(k - 2)..=(k - 2) {
                    for s in -(k - 2)..=(k - 2) {
                        if r.abs() + s.abs() <= k - 2 && (r + s - k).rem_euclid(2) == 0 {
                            expected.push((r, s));
                        }
                    }
                }
                let mut sorted = positions.clone();
                sorted.sort();
                sorted.dedup();
                assert_eq!(sorted.len(), positions.len(), "one per position at {k}");
                expected.sort();
                assert_eq!(sorted, expected, "positions at {k}");
                // The same comparison one level up, excluding the extreme
                // columns.
                let (b1, b2) = (ctx.b0(&a), ctx.b0(&a2));
                let (j1, j2) = (ctx.asm_to_ideal(&b1), ctx.asm_to_ideal(&b2));
                assert_eq!(j1 & !j2, 0, "partner containment at {k}");
                let diff_b = j2 & !j1;
                let poset_b = ctx.next_level_poset();
                let mut positions_b: Vec<(i64, i64)> = (0..poset_b.len())
                    .filter(|&e| diff_b >> e & 1 == 1)
                    .map(|e| (poset_b.elements()[e].r, poset_b.elements()[e].s))
                    .collect();
                let mut expected_b: Vec<(i64, i64)> = Vec::new();
                for r in -(k - 1)..=(k - 1) {
                    for s in -(k - 1)..=(k - 1) {
                        if r.abs() + s.abs() <= k - 1
                            && (r + s - k - 1).rem_euclid(2) == 0
                            && s.abs() != k - 1
                        {
                            expected_b.push((r, s));
                        }
                    }
                }
                positions_b.sort();
                assert_eq!(positions_b.len(), expected_b.len(), "partner count at {k}");
                expected_b.sort();
                assert_eq!(positions_b, expected_b, "partner positions at {k}");
            }
        }
    }

    #[test]
    fn restriction_substitutes_minus_one() {
        let s: BTreeSet<i64> = [3].into_iter().collect();
        assert!(one_plus(3).restrict(&s).is_zero());
        let p = y(3).mul(&y(5)).add(&y(3).mul(&y(3)));
        let restricted = p.restrict(&s);
        let expected = YPoly::one().sub(&y(5));
        assert_eq!(restricted, expected);
    }

    #[test]
    fn row_and_column_restrictions_kill_the_polynomial() {
        let j = 0i64;
        for k in 2..=4i64 {
            let f = f_recursive(j, k);
            let mut l = -(k - 1);
            while l <= k - 1 {
                let row: BTreeSet<i64> = (0..k)
                    .map(|idx| j + l - 2 * (k - 1) + 4 * idx)
                    .collect();
                assert!(f.restrict(&row).is_zero(), "row at l={l}, k={k}");
                let column: BTreeSet<i64> =
                    (0..k).map(|idx| j + 2 * l - (k - 1) + 2 * idx).collect();
                assert!(f.restrict(&column).is_zero(), "column at l={l}, k={k}");
                l += 2;
            }
        }
    }

    #[test]
    fn short_progressions_leave_the_polynomial_nonzero() {
        let j = 0i64;
        for k in 2..=5i64 {
            let f = f_recursive(j, k);
            for step in [2i64, 4] {
                for size in 1..k {
                    let start = j + k + 1 - 2 * ((size * step) / 4);
                    let s: BTreeSet<i64> =
                        (0..size).map(|idx| start + step * idx).collect();
                    assert!(
                        !f.restrict(&s).is_zero(),
                        "progression step {step} size {size} at k={k}"
                    );
                }
            }
        }
    }

    #[test]
    fn direct_restricted_sum_matches_full_restriction() {
        let j = 1i64;
        for k in 1..=4i64 {
            let full = f_recursive(j, k);
            for s_base in [vec![j + k + 1], vec![j + k + 1, j + k + 5]] {
                let s: BTreeSet<i64> = s_base.iter().copied().collect();
                assert_eq!(
                    f_asm_restricted(j, k, &s),
                    full.restrict(&s),
                    "restriction at k={k}, s={s:?}"
                );
            }
        }
    }

    #[test]
    fn avoiding_enumeration_matches_filtered_enumeration() {
        let j = 0i64;
        let k = 3usize;
        let s: BTreeSet<i64> = [j + 2 + 4 - 12, j + 4 + 8 - 12].into_iter().collect();
        let direct = asm_enumerate_avoiding(k, &s, j);
        let filtered: Vec<Asm> = asm_enumerate(k)
            .into_iter()
            .filter(|a| avoids(a, &s, j))
            .collect();
        assert_eq!(direct, filtered);
    }

    #[test]
    fn cyclic_reduction_folds_variable_indices() {
        let p = y(10).mul(&y(-1)).add(&y(0));
        let reduced = p.cyclic_reduce(5);
        let expected = y(0).mul(&y(9)).add(&y(0));
        assert_eq!(reduced, expected);
    }

    #[test]
    fn evaluation_matches_hand_computation() {
        let f = f_recursive(0, 1);
        let v = f.eval(|_| rational(2, 1)).unwrap();
        assert_eq!(v, rational(3, 1));
        let zero_at = one_plus(5).eval(|i| if i == 5 { rational(-1, 1) } else { rational(1, 1) });
        assert!(zero_at.unwrap().is_zero());
    }

    #[test]
    fn text_form_is_deterministic() {
        let p = YPoly::one()
            .add(&y(3))
            .add(&y(3).mul(&y(5)).mul(&y(5)))
            .sub(&YPoly::constant(2).mul(&y(7)));
        assert_eq!(p.to_text(), "1 + y[3] + y[3]*y[5]^2 - 2*y[7]");
        assert_eq!(YPoly::zero().to_text(), "0");
    }

    #[test]
    fn weight_of_small_matrices_matches_hand_expansion() {
        let ctx = AsmContext::new(2);
        let anti = Asm::new(2, vec![0, 1, 1, 0]).unwrap();
        assert_eq!(ctx.wt(&anti, 4), Monomial::var(4));
        assert_eq!(ctx.wt(&Asm::identity(2), 4), Monomial::one());
        let b = ctx.b0(&anti);
        assert_eq!(ctx.wt(&b, 4), Monomial::from_pairs([(1, 1), (7, 1)]));
    }
}
