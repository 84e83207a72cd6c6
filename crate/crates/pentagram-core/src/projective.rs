//! Exact projective plane over a scalar field: points, lines, incidence,
//! cross and triple ratios, seeded generic choices, and straightedge
//! constructions.
//!
//! Everything is computed on homogeneous coordinate triples with exact
//! arithmetic, so geometric predicates (collinearity, concurrency,
//! incidence) are exact zero tests.  Points and lines are dual: a line is
//! represented by the coordinate triple of its dual point, `join` and `meet`
//! are the same cross product, and constructions on lines reuse the point
//! code through that duality.

use crate::scalar::{Field, Poly, RatFunc, Rational, ScalarError};
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::fmt;

/// Bound on internal resampling when a random auxiliary choice degenerates.
pub const MAX_RANDOM_RETRIES: usize = 64;

/// Errors from projective constructions.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GeomError {
    #[error("zero coordinate triple")]
    ZeroTriple,
    #[error("degenerate join/meet: arguments coincide")]
    DegenerateJoinMeet,
    #[error("points not collinear")]
    NotCollinear,
    #[error("lines not concurrent")]
    NotConcurrent,
    #[error("repeated point in ratio")]
    RepeatedPoint,
    #[error("relation indeterminate")]
    Indeterminate,
    #[error("no coordinate chart: every position vanishes at some input")]
    NoChart,
    #[error("singular matrix")]
    SingularMatrix,
    #[error("degenerate configuration: {0}")]
    DegenerateConfig(String),
    #[error(transparent)]
    Scalar(#[from] ScalarError),
}

// ---------------------------------------------------------------------------
// Coordinate-triple primitives.
// ---------------------------------------------------------------------------

pub(crate) fn t_is_zero<F: Field>(t: &[F; 3]) -> bool {
    t.iter().all(|c| c.is_zero())
}

pub(crate) fn t_cross<F: Field>(a: &[F; 3], b: &[F; 3]) -> [F; 3] {
    [
        a[1].clone() * b[2].clone() - a[2].clone() * b[1].clone(),
        a[2].clone() * b[0].clone() - a[0].clone() * b[2].clone(),
        a[0].clone() * b[1].clone() - a[1].clone() * b[0].clone(),
    ]
}

pub(crate) fn t_dot<F: Field>(a: &[F; 3], b: &[F; 3]) -> F {
    a[0].clone() * b[0].clone() + a[1].clone() * b[1].clone() + a[2].clone() * b[2].clone()
}

/// Proportionality up to scale: all 2x2 minors of the stacked pair vanish.
pub(crate) fn t_proportional<F: Field>(a: &[F; 3], b: &[F; 3]) -> bool {
    t_is_zero(&t_cross(a, b))
}

pub(crate) fn t_det3<F: Field>(a: &[F; 3], b: &[F; 3], c: &[F; 3]) -> F {
    t_dot(a, &t_cross(b, c))
}

pub(crate) fn t_lin_comb<F: Field>(la: &F, a: &[F; 3], lb: &F, b: &[F; 3]) -> [F; 3] {
    [
        la.clone() * a[0].clone() + lb.clone() * b[0].clone(),
        la.clone() * a[1].clone() + lb.clone() * b[1].clone(),
        la.clone() * a[2].clone() + lb.clone() * b[2].clone(),
    ]
}

fn det2<F: Field>(a: &[F; 3], b: &[F; 3], r: usize, s: usize) -> F {
    a[r].clone() * b[s].clone() - a[s].clone() * b[r].clone()
}

/// Row pair faithful on a line: drops the first position where the line
/// coordinate is nonzero (so distinct points on the line stay distinct after
/// restriction to the remaining two rows).
fn rows_for_line<F: Field>(l: &[F; 3]) -> Option<(usize, usize)> {
    let k = l.iter().position(|c| !c.is_zero())?;
    match k {
        0 => Some((1, 2)),
        1 => Some((0, 2)),
        _ => Some((0, 1)),
    }
}

// ---------------------------------------------------------------------------
// Points and lines.
// ---------------------------------------------------------------------------

/// Point of the projective plane: a nonzero coordinate triple up to scale.
#[derive(Clone, Debug)]
pub struct ProjPoint<F: Field> {
    coords: [F; 3],
}

/// Line of the projective plane in dual coordinates, up to scale.
#[derive(Clone, Debug)]
pub struct ProjLine<F: Field> {
    coords: [F; 3],
}

impl<F: Field> PartialEq for ProjPoint<F> {
    fn eq(&self, other: &Self) -> bool {
        t_proportional(&self.coords, &other.coords)
    }
}

impl<F: Field> PartialEq for ProjLine<F> {
    fn eq(&self, other: &Self) -> bool {
        t_proportional(&self.coords, &other.coords)
    }
}

impl<F: Field> fmt::Display for ProjPoint<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{} : {} : {}]", self.coords[0], self.coords[1], self.coords[2])
    }
}

impl<F: Field> fmt::Display for ProjLine<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<{} : {} : {}>", self.coords[0], self.coords[1], self.coords[2])
    }
}

impl<F: Field> ProjPoint<F> {
    pub fn new(coords: [F; 3]) -> Result<Self, GeomError> {
        if t_is_zero(&coords) {
            return Err(GeomError::ZeroTriple);
        }
        Ok(ProjPoint { coords })
    }

    /// Affine point `(x, y)` embedded as `[x : y : 1]`.
    pub fn from_affine(x: F, y: F) -> Self {
        ProjPoint {
            coords: [x, y, F::one()],
        }
    }

    pub fn from_ints(a: i64, b: i64, c: i64) -> Self {
        ProjPoint::new([F::from_int(a), F::from_int(b), F::from_int(c)])
            .expect("nonzero integer triple")
    }

    pub fn coords(&self) -> &[F; 3] {
        &self.coords
    }

    pub fn into_coords(self) -> [F; 3] {
        self.coords
    }

    /// Reinterprets the coordinate triple as a line (projective duality).
    pub fn dual(&self) -> ProjLine<F> {
        ProjLine {
            coords: self.coords.clone(),
        }
    }
}

impl<F: Field> ProjLine<F> {
    pub fn new(coords: [F; 3]) -> Result<Self, GeomError> {
        if t_is_zero(&coords) {
            return Err(GeomError::ZeroTriple);
        }
        Ok(ProjLine { coords })
    }

    pub fn from_ints(a: i64, b: i64, c: i64) -> Self {
        ProjLine::new([F::from_int(a), F::from_int(b), F::from_int(c)])
            .expect("nonzero integer triple")
    }

    pub fn coords(&self) -> &[F; 3] {
        &self.coords
    }

    pub fn into_coords(self) -> [F; 3] {
        self.coords
    }

    /// Reinterprets the coordinate triple as a point (projective duality).
    pub fn dual(&self) -> ProjPoint<F> {
        ProjPoint {
            coords: self.coords.clone(),
        }
    }
}

/// Line through two distinct points (cross product of triples).
pub fn join<F: Field>(p: &ProjPoint<F>, q: &ProjPoint<F>) -> Result<ProjLine<F>, GeomError> {
    let c = t_cross(&p.coords, &q.coords);
    if t_is_zero(&c) {
        return Err(GeomError::DegenerateJoinMeet);
    }
    Ok(ProjLine { coords: c })
}

/// Intersection of two distinct lines (cross product of dual triples).
pub fn meet<F: Field>(l: &ProjLine<F>, m: &ProjLine<F>) -> Result<ProjPoint<F>, GeomError> {
    let c = t_cross(&l.coords, &m.coords);
    if t_is_zero(&c) {
        return Err(GeomError::DegenerateJoinMeet);
    }
    Ok(ProjPoint { coords: c })
}

/// Incidence: the dot product of the coordinate triples vanishes.
pub fn incident<F: Field>(p: &ProjPoint<F>, l: &ProjLine<F>) -> bool {
    t_dot(&p.coords, &l.coords).is_zero()
}

pub fn collinear<F: Field>(a: &ProjPoint<F>, b: &ProjPoint<F>, c: &ProjPoint<F>) -> bool {
    t_det3(&a.coords, &b.coords, &c.coords).is_zero()
}

pub fn concurrent<F: Field>(l: &ProjLine<F>, m: &ProjLine<F>, n: &ProjLine<F>) -> bool {
    t_det3(&l.coords, &m.coords, &n.coords).is_zero()
}

// ---------------------------------------------------------------------------
// 3x3 matrices (projective transformations, monodromies).
// ---------------------------------------------------------------------------

pub type Mat3<F> = [[F; 3]; 3];

pub fn mat_identity<F: Field>() -> Mat3<F> {
    let mut m = mat_zero();
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = F::one();
    }
    m
}

fn mat_zero<F: Field>() -> Mat3<F> {
    [
        [F::zero(), F::zero(), F::zero()],
        [F::zero(), F::zero(), F::zero()],
        [F::zero(), F::zero(), F::zero()],
    ]
}

pub fn mat_from_i64<F: Field>(m: [[i64; 3]; 3]) -> Mat3<F> {
    m.map(|row| row.map(F::from_int))
}

pub fn mat_mul<F: Field>(a: &Mat3<F>, b: &Mat3<F>) -> Mat3<F> {
    let mut out = mat_zero();
    for i in 0..3 {
        for j in 0..3 {
            let mut acc = F::zero();
            for (k, bk) in b.iter().enumerate() {
                acc = acc + a[i][k].clone() * bk[j].clone();
            }
            out[i][j] = acc;
        }
    }
    out
}

pub fn mat_vec<F: Field>(m: &Mat3<F>, v: &[F; 3]) -> [F; 3] {
    let mut out = [F::zero(), F::zero(), F::zero()];
    for (i, row) in m.iter().enumerate() {
        out[i] = t_dot(row, v);
    }
    out
}

pub fn mat_transpose<F: Field>(m: &Mat3<F>) -> Mat3<F> {
    let mut out = mat_zero();
    for i in 0..3 {
        for (j, row) in m.iter().enumerate() {
            out[i][j] = row[i].clone();
        }
    }
    out
}

pub fn mat_det<F: Field>(m: &Mat3<F>) -> F {
    t_det3(&m[0], &m[1], &m[2])
}

/// Adjugate: `m * adjugate(m) = det(m) * I`.
pub fn mat_adjugate<F: Field>(m: &Mat3<F>) -> Mat3<F> {
    let cof = |r1: usize, r2: usize, c1: usize, c2: usize| {
        m[r1][c1].clone() * m[r2][c2].clone() - m[r1][c2].clone() * m[r2][c1].clone()
    };
    [
        [cof(1, 2, 1, 2), -cof(0, 2, 1, 2), cof(0, 1, 1, 2)],
        [-cof(1, 2, 0, 2), cof(0, 2, 0, 2), -cof(0, 1, 0, 2)],
        [cof(1, 2, 0, 1), -cof(0, 2, 0, 1), cof(0, 1, 0, 1)],
    ]
}

/// Whether two matrices agree up to a nonzero scalar factor.
pub fn mat_proportional<F: Field>(a: &Mat3<F>, b: &Mat3<F>) -> bool {
    let av: Vec<&F> = a.iter().flatten().collect();
    let bv: Vec<&F> = b.iter().flatten().collect();
    for i in 0..9 {
        for j in (i + 1)..9 {
            if av[i].clone() * bv[j].clone() != av[j].clone() * bv[i].clone() {
                return false;
            }
        }
    }
    av.iter().any(|x| !x.is_zero()) && bv.iter().any(|x| !x.is_zero())
}

pub fn mat_inverse<F: Field>(m: &Mat3<F>) -> Result<Mat3<F>, GeomError> {
    let d = mat_det(m);
    if d.is_zero() {
        return Err(GeomError::SingularMatrix);
    }
    let adj = mat_adjugate(m);
    Ok(adj.map(|row| row.map(|x| x / d.clone())))
}

pub fn apply_to_point<F: Field>(m: &Mat3<F>, p: &ProjPoint<F>) -> Result<ProjPoint<F>, GeomError> {
    ProjPoint::new(mat_vec(m, &p.coords))
}

/// Transforms a line under the point map `m`: dual coordinates transform by
/// the transposed adjugate.
pub fn apply_to_line<F: Field>(m: &Mat3<F>, l: &ProjLine<F>) -> Result<ProjLine<F>, GeomError> {
    ProjLine::new(mat_vec(&mat_transpose(&mat_adjugate(m)), &l.coords))
}

// ---------------------------------------------------------------------------
// Cross ratio.
// ---------------------------------------------------------------------------

/// Cross ratio `[a,b,c,d] = (a-b)(c-d)/((b-c)(d-a))` as a homogeneous pair
/// `(numerator, denominator)`, total in `d` (infinite values show up as a
/// zero denominator part).  Requires `a`, `b`, `c` pairwise distinct and all
/// four collinear.
fn cross_ratio_pair_triples<F: Field>(ts: [&[F; 3]; 4]) -> Result<(F, F), GeomError> {
    let [a, b, c, d] = ts;
    if t_proportional(a, b) || t_proportional(a, c) || t_proportional(b, c) {
        return Err(GeomError::RepeatedPoint);
    }
    let l = t_cross(a, b);
    if !t_dot(c, &l).is_zero() || !t_dot(d, &l).is_zero() {
        return Err(GeomError::NotCollinear);
    }
    let (r, s) = rows_for_line(&l).expect("nonzero line");
    let num = det2(a, b, r, s) * det2(c, d, r, s);
    let den = det2(b, c, r, s) * det2(d, a, r, s);
    Ok((num, den))
}

pub fn cross_ratio_pair<F: Field>(
    a: &ProjPoint<F>,
    b: &ProjPoint<F>,
    c: &ProjPoint<F>,
    d: &ProjPoint<F>,
) -> Result<(F, F), GeomError> {
    cross_ratio_pair_triples([&a.coords, &b.coords, &c.coords, &d.coords])
}

/// Cross ratio of four pairwise-distinct collinear points.
pub fn cross_ratio<F: Field>(
    a: &ProjPoint<F>,
    b: &ProjPoint<F>,
    c: &ProjPoint<F>,
    d: &ProjPoint<F>,
) -> Result<F, GeomError> {
    if d == a || d == b || d == c {
        return Err(GeomError::RepeatedPoint);
    }
    let (num, den) = cross_ratio_pair(a, b, c, d)?;
    Ok(num.checked_div(&den)?)
}

/// Cross ratio in the reordering `chi(a,b,c,d) = [b,a,c,d]`.
pub fn chi<F: Field>(
    a: &ProjPoint<F>,
    b: &ProjPoint<F>,
    c: &ProjPoint<F>,
    d: &ProjPoint<F>,
) -> Result<F, GeomError> {
    cross_ratio(b, a, c, d)
}

fn map_dual_err(e: GeomError) -> GeomError {
    match e {
        GeomError::NotCollinear => GeomError::NotConcurrent,
        other => other,
    }
}

/// Cross ratio of four concurrent lines (dual of the point version).
pub fn cross_ratio_lines<F: Field>(
    a: &ProjLine<F>,
    b: &ProjLine<F>,
    c: &ProjLine<F>,
    d: &ProjLine<F>,
) -> Result<F, GeomError> {
    cross_ratio(&a.dual(), &b.dual(), &c.dual(), &d.dual()).map_err(map_dual_err)
}

pub fn chi_lines<F: Field>(
    a: &ProjLine<F>,
    b: &ProjLine<F>,
    c: &ProjLine<F>,
    d: &ProjLine<F>,
) -> Result<F, GeomError> {
    cross_ratio_lines(b, a, c, d)
}

// ---------------------------------------------------------------------------
// Triple ratio.
// ---------------------------------------------------------------------------

/// Signed ratio `XY/YZ` for collinear `X`, `Y`, `Z` as a homogeneous pair:
/// writing `Y = lambda X + mu Z`, the pair is proportional to `(mu, lambda)`.
/// When `X = Z` (and `Y` differs) the ratio degenerates to `-1`.
fn ratio_factor_pair<F: Field>(x: &[F; 3], y: &[F; 3], z: &[F; 3]) -> Result<(F, F), GeomError> {
    if t_proportional(x, z) {
        if t_proportional(y, x) {
            return Err(GeomError::Indeterminate);
        }
        return Ok((-F::one(), F::one()));
    }
    let l = t_cross(x, z);
    let (r, s) = rows_for_line(&l).expect("nonzero line");
    Ok((det2(x, y, r, s), det2(y, z, r, s)))
}

/// Chart-normalizes six triples: scales each so the chosen coordinate (the
/// first position at which all six are nonzero) equals 1.
fn chart_normalize<F: Field>(ts: &[[F; 3]; 6]) -> Result<[[F; 3]; 6], GeomError> {
    let chart = (0..3)
        .find(|&p| ts.iter().all(|t| !t[p].is_zero()))
        .ok_or(GeomError::NoChart)?;
    let mut out = ts.clone();
    for t in &mut out {
        let c = t[chart].clone();
        for coord in t.iter_mut() {
            *coord = coord.clone() / c.clone();
        }
    }
    Ok(out)
}

/// Product of the three signed ratios of a six-point configuration, as a
/// homogeneous pair, after chart normalization.
fn multi_ratio_pair_strict<F: Field>(ts: &[[F; 3]; 6]) -> Result<(F, F), GeomError> {
    let n = chart_normalize(ts)?;
    let mut num = F::one();
    let mut den = F::one();
    for k in 0..3 {
        let (fx, fy, fz) = (&n[2 * k], &n[2 * k + 1], &n[(2 * k + 2) % 6]);
        let (fnum, fden) = ratio_factor_pair(fx, fy, fz)?;
        num = num * fnum;
        den = den * fden;
    }
    Ok((num, den))
}

/// Like [`multi_ratio_pair_strict`] but total on chartless configurations
/// whose factors are all scale-invariant (no triple with equal endpoints):
/// in that case every point enters one numerator and one denominator
/// determinant, so no normalization is needed.  Used to verify solver
/// candidates, which may legitimately lie at infinity of every chart.
fn multi_ratio_pair_extended<F: Field>(ts: &[[F; 3]; 6]) -> Result<(F, F), GeomError> {
    for k in 0..3 {
        if !t_det3(&ts[2 * k], &ts[2 * k + 1], &ts[(2 * k + 2) % 6]).is_zero() {
            return Err(GeomError::NotCollinear);
        }
    }
    if (0..3).any(|k| t_proportional(&ts[2 * k], &ts[(2 * k + 2) % 6])) {
        return multi_ratio_pair_strict(ts);
    }
    let mut num = F::one();
    let mut den = F::one();
    for k in 0..3 {
        let (n, d) = ratio_factor_pair(&ts[2 * k], &ts[2 * k + 1], &ts[(2 * k + 2) % 6])?;
        num = num * n;
        den = den * d;
    }
    Ok((num, den))
}

/// Triple ratio `[P1..P6] = (P1P2/P2P3)(P3P4/P4P5)(P5P6/P6P1)` of six points
/// with `P1,P2,P3`, `P3,P4,P5`, and `P5,P6,P1` collinear.
pub fn triple_ratio<F: Field>(ps: &[ProjPoint<F>; 6]) -> Result<F, GeomError> {
    let ts: [[F; 3]; 6] = [
        ps[0].coords.clone(),
        ps[1].coords.clone(),
        ps[2].coords.clone(),
        ps[3].coords.clone(),
        ps[4].coords.clone(),
        ps[5].coords.clone(),
    ];
    triple_ratio_triples(&ts)
}

fn triple_ratio_triples<F: Field>(ts: &[[F; 3]; 6]) -> Result<F, GeomError> {
    let (num, den) = triple_ratio_pair_triples(ts)?;
    Ok(num.checked_div(&den)?)
}

/// Triple ratio as a homogeneous pair, with the same validity checks as
/// `triple_ratio` (distinct neighbours, three collinear triples).
pub(crate) fn triple_ratio_pair_triples<F: Field>(ts: &[[F; 3]; 6]) -> Result<(F, F), GeomError> {
    for i in 0..6 {
        if t_proportional(&ts[i], &ts[(i + 1) % 6]) {
            return Err(GeomError::RepeatedPoint);
        }
    }
    for k in 0..3 {
        if !t_det3(&ts[2 * k], &ts[2 * k + 1], &ts[(2 * k + 2) % 6]).is_zero() {
            return Err(GeomError::NotCollinear);
        }
    }
    multi_ratio_pair_strict(ts)
}

/// Triple ratio of six lines (dual: collinearity becomes concurrency).
pub fn triple_ratio_lines<F: Field>(ls: &[ProjLine<F>; 6]) -> Result<F, GeomError> {
    let ts: [[F; 3]; 6] = [
        ls[0].coords.clone(),
        ls[1].coords.clone(),
        ls[2].coords.clone(),
        ls[3].coords.clone(),
        ls[4].coords.clone(),
        ls[5].coords.clone(),
    ];
    triple_ratio_triples(&ts).map_err(map_dual_err)
}

// ---------------------------------------------------------------------------
// Slot solvers: one unknown point in a ratio identity.
// ---------------------------------------------------------------------------

/// Solves a triple-ratio identity for one unknown point.
///
/// `known` holds five points and exactly one `None`; the unknown is sought on
/// the line spanned by the anchors `x0`, `x1` as `U = lambda x0 + mu x1`.
/// `target` is the required triple-ratio value as a homogeneous pair.  The
/// unknown enters the product through exactly one numerator determinant and
/// one denominator determinant, both linear in `(lambda, mu)`, so the
/// identity reduces to one linear equation.  Every candidate is verified
/// against the full triple-ratio evaluation before being returned.
pub fn multi_ratio_solve<F: Field>(
    known: &[Option<ProjPoint<F>>; 6],
    x0: &ProjPoint<F>,
    x1: &ProjPoint<F>,
    target: &(F, F),
) -> Result<ProjPoint<F>, GeomError> {
    let slot = known
        .iter()
        .position(|p| p.is_none())
        .expect("one empty slot");
    assert_eq!(
        known.iter().filter(|p| p.is_none()).count(),
        1,
        "exactly one empty slot"
    );
    assert!(
        !(target.0.is_zero() && target.1.is_zero()),
        "target pair must be nonzero"
    );
    if t_proportional(&x0.coords, &x1.coords) {
        return Err(GeomError::DegenerateConfig("anchors coincide".into()));
    }
    // Chart normalization of the knowns is only needed when a fully-known
    // triple has proportional endpoints: its degenerate `-1` factor breaks
    // the scale cancellation that otherwise makes the identity invariant.
    let needs_chart = (0..3).any(|k| {
        let idx = [2 * k, 2 * k + 1, (2 * k + 2) % 6];
        !idx.contains(&slot)
            && t_proportional(
                &known[idx[0]].as_ref().unwrap().coords,
                &known[idx[2]].as_ref().unwrap().coords,
            )
    });
    let charts: Vec<Option<usize>> = if needs_chart {
        (0..3)
            .filter(|&p| known.iter().flatten().all(|q| !q.coords[p].is_zero()))
            .map(Some)
            .collect()
    } else {
        vec![None]
    };
    if charts.is_empty() {
        return Err(GeomError::NoChart);
    }
    let mut last_err = GeomError::Indeterminate;
    for chart in charts {
        let pts: [Option<[F; 3]>; 6] = std::array::from_fn(|i| {
            known[i].as_ref().map(|p| match chart {
                None => p.coords.clone(),
                Some(c) => {
                    let s = p.coords[c].clone();
                    [
                        p.coords[0].clone() / s.clone(),
                        p.coords[1].clone() / s.clone(),
                        p.coords[2].clone() / s,
                    ]
                }
            })
        });
        match solve_in_chart(&pts, slot, &x0.coords, &x1.coords, target) {
            Ok(u) => {
                // Verify on the completed configuration.
                let full: [[F; 3]; 6] = std::array::from_fn(|i| match &known[i] {
                    Some(p) => p.coords.clone(),
                    None => u.clone(),
                });
                match multi_ratio_pair_extended(&full) {
                    Ok((vn, vd)) => {
                        if vn * target.1.clone() == target.0.clone() * vd {
                            return ProjPoint::new(u);
                        }
                        last_err =
                            GeomError::DegenerateConfig("no consistent solution".into());
                    }
                    Err(e) => last_err = e,
                }
            }
            Err(e) => last_err = e,
        }
    }
    Err(last_err)
}

fn solve_in_chart<F: Field>(
    pts: &[Option<[F; 3]>; 6],
    slot: usize,
    x0: &[F; 3],
    x1: &[F; 3],
    target: &(F, F),
) -> Result<[F; 3], GeomError> {
    let mut n_rest = F::one();
    let mut d_rest = F::one();
    // Linear numerator/denominator factors: coefficients of (lambda, mu).
    let mut lin_num: Option<(F, F)> = None;
    let mut lin_den: Option<(F, F)> = None;
    for k in 0..3 {
        let idx = [2 * k, 2 * k + 1, (2 * k + 2) % 6];
        let upos = idx.iter().position(|&i| i == slot);
        match upos {
            None => {
                let (fx, fy, fz) = (
                    pts[idx[0]].as_ref().unwrap(),
                    pts[idx[1]].as_ref().unwrap(),
                    pts[idx[2]].as_ref().unwrap(),
                );
                let (n, d) = ratio_factor_pair(fx, fy, fz)?;
                n_rest = n_rest * n;
                d_rest = d_rest * d;
            }
            Some(1) => {
                // Unknown in the middle: factor det(X,U)/det(U,Z).
                let x = pts[idx[0]].as_ref().unwrap();
                let z = pts[idx[2]].as_ref().unwrap();
                if t_proportional(x, z) {
                    // The unknown cancels from the identity.
                    return Err(GeomError::Indeterminate);
                }
                let l = t_cross(x, z);
                let (r, s) = rows_for_line(&l).expect("nonzero line");
                lin_num = Some((det2(x, x0, r, s), det2(x, x1, r, s)));
                lin_den = Some((det2(x0, z, r, s), det2(x1, z, r, s)));
            }
            Some(0) => {
                // Unknown first: factor det(U,Y)/det(Y,Z).
                let y = pts[idx[1]].as_ref().unwrap();
                let z = pts[idx[2]].as_ref().unwrap();
                if t_proportional(y, z) {
                    return Err(GeomError::DegenerateConfig(
                        "repeated points adjacent to unknown".into(),
                    ));
                }
                let l = t_cross(y, z);
                let (r, s) = rows_for_line(&l).expect("nonzero line");
                lin_num = Some((det2(x0, y, r, s), det2(x1, y, r, s)));
                d_rest = d_rest * det2(y, z, r, s);
            }
            Some(2) => {
                // Unknown last: factor det(X,Y)/det(Y,U).
                let x = pts[idx[0]].as_ref().unwrap();
                let y = pts[idx[1]].as_ref().unwrap();
                if t_proportional(x, y) {
                    return Err(GeomError::DegenerateConfig(
                        "repeated points adjacent to unknown".into(),
                    ));
                }
                let l = t_cross(x, y);
                let (r, s) = rows_for_line(&l).expect("nonzero line");
                n_rest = n_rest * det2(x, y, r, s);
                lin_den = Some((det2(y, x0, r, s), det2(y, x1, r, s)));
            }
            Some(_) => unreachable!(),
        }
    }
    let (a, b) = lin_num.ok_or(GeomError::Indeterminate)?;
    let (c, d) = lin_den.ok_or(GeomError::Indeterminate)?;
    // target.1 * N(lambda, mu) = target.0 * D(lambda, mu)
    let coef_l = target.1.clone() * n_rest.clone() * a - target.0.clone() * d_rest.clone() * c;
    let coef_m = target.1.clone() * n_rest * b - target.0.clone() * d_rest * d;
    if coef_l.is_zero() && coef_m.is_zero() {
        return Err(GeomError::Indeterminate);
    }
    let u = t_lin_comb(&coef_m, x0, &(-coef_l), x1);
    if t_is_zero(&u) {
        return Err(GeomError::Indeterminate);
    }
    Ok(u)
}

/// Solves a cross-ratio identity `[P1,P2,P3,P4] = target` for one unknown
/// point on the line spanned by the anchors.
pub fn cross_ratio_solve<F: Field>(
    known: &[Option<ProjPoint<F>>; 4],
    x0: &ProjPoint<F>,
    x1: &ProjPoint<F>,
    target: &(F, F),
) -> Result<ProjPoint<F>, GeomError> {
    let slot = known
        .iter()
        .position(|p| p.is_none())
        .expect("one empty slot");
    assert_eq!(
        known.iter().filter(|p| p.is_none()).count(),
        1,
        "exactly one empty slot"
    );
    assert!(
        !(target.0.is_zero() && target.1.is_zero()),
        "target pair must be nonzero"
    );
    if t_proportional(&x0.coords, &x1.coords) {
        return Err(GeomError::DegenerateConfig("anchors coincide".into()));
    }
    let l = t_cross(&x0.coords, &x1.coords);
    let (r, s) = rows_for_line(&l).expect("nonzero line");
    // Determinant pairs: numerator (0,1), (2,3); denominator (1,2), (3,0).
    let mut n_rest = F::one();
    let mut d_rest = F::one();
    let mut lin_num: Option<(F, F)> = None;
    let mut lin_den: Option<(F, F)> = None;
    let dets: [(usize, usize, bool); 4] =
        [(0, 1, true), (2, 3, true), (1, 2, false), (3, 0, false)];
    for (i, j, is_num) in dets {
        let lin = if i == slot {
            let other = known[j].as_ref().unwrap();
            Some((
                det2(&x0.coords, &other.coords, r, s),
                det2(&x1.coords, &other.coords, r, s),
            ))
        } else if j == slot {
            let other = known[i].as_ref().unwrap();
            Some((
                det2(&other.coords, &x0.coords, r, s),
                det2(&other.coords, &x1.coords, r, s),
            ))
        } else {
            None
        };
        match (lin, is_num) {
            (Some(p), true) => lin_num = Some(p),
            (Some(p), false) => lin_den = Some(p),
            (None, is_num) => {
                let v = det2(
                    &known[i].as_ref().unwrap().coords,
                    &known[j].as_ref().unwrap().coords,
                    r,
                    s,
                );
                if is_num {
                    n_rest = n_rest * v;
                } else {
                    d_rest = d_rest * v;
                }
            }
        }
    }
    let (a, b) = lin_num.expect("slot occurs in a numerator det");
    let (c, d) = lin_den.expect("slot occurs in a denominator det");
    let coef_l = target.1.clone() * n_rest.clone() * a - target.0.clone() * d_rest.clone() * c;
    let coef_m = target.1.clone() * n_rest * b - target.0.clone() * d_rest * d;
    if coef_l.is_zero() && coef_m.is_zero() {
        return Err(GeomError::Indeterminate);
    }
    let u = t_lin_comb(&coef_m, &x0.coords, &(-coef_l), &x1.coords);
    let u = ProjPoint::new(u).map_err(|_| GeomError::Indeterminate)?;
    // Verify on the completed configuration.
    let full: Vec<&ProjPoint<F>> = (0..4)
        .map(|i| known[i].as_ref().unwrap_or(&u))
        .collect();
    let (vn, vd) = cross_ratio_pair_triples([
        &full[0].coords,
        &full[1].coords,
        &full[2].coords,
        &full[3].coords,
    ])?;
    if vn * target.1.clone() != target.0.clone() * vd {
        return Err(GeomError::DegenerateConfig("no consistent solution".into()));
    }
    Ok(u)
}

// ---------------------------------------------------------------------------
// Triple conjugate and projective transformations between lines.
// ---------------------------------------------------------------------------

/// The unique sixth point on the common line with `[P1,...,P5,P6] = -1`,
/// computed algebraically.
///
/// Returns the line's point at infinity naturally when the affine equation
/// has no finite solution; errors as indeterminate exactly when `P1 = P5`
/// and `P2 = P4` (the identity then holds for every sixth point).
pub fn triple_conjugate<F: Field>(ps: &[ProjPoint<F>; 5]) -> Result<ProjPoint<F>, GeomError> {
    if ps[0] == ps[4] {
        if ps[1] == ps[3] {
            return Err(GeomError::Indeterminate);
        }
        return Err(GeomError::DegenerateConfig(
            "P1 = P5 but P2 != P4: no sixth point satisfies the identity".into(),
        ));
    }
    let l = join(&ps[0], &ps[4])?;
    for p in &ps[1..4] {
        if !incident(p, &l) {
            return Err(GeomError::NotCollinear);
        }
    }
    let known = [
        Some(ps[0].clone()),
        Some(ps[1].clone()),
        Some(ps[2].clone()),
        Some(ps[3].clone()),
        Some(ps[4].clone()),
        None,
    ];
    multi_ratio_solve(&known, &ps[4], &ps[0], &(-F::one(), F::one()))
}

/// Straightedge construction of the triple conjugate, using random auxiliary
/// choices: a Menelaus configuration is built over the five points and its
/// sixth point is returned.
pub fn triple_conjugate_construction<F: Field>(
    ps: &[ProjPoint<F>; 5],
    src: &mut RandomSource,
) -> Result<ProjPoint<F>, GeomError> {
    let [a, b, c, d, e] = ps;
    let mut last_err = GeomError::Indeterminate;
    for _ in 0..MAX_RANDOM_RETRIES {
        let attempt = (|| -> Result<ProjPoint<F>, GeomError> {
            let p: ProjPoint<F> = src.point();
            let c1 = src.point_on(&join(c, &p)?)?;
            let b1 = meet(&join(b, &p)?, &join(a, &c1)?)?;
            let d1 = meet(&join(d, &p)?, &join(&c1, e)?)?;
            meet(&join(&b1, &d1)?, &join(a, e)?)
        })();
        match attempt {
            Ok(f) => return Ok(f),
            Err(e) => last_err = e,
        }
    }
    Err(last_err)
}

/// Applies the unique projective transformation of lines sending `A,B,C` to
/// `A',B',C'` to the point `D` (algebraic route: cross-ratio transport).
pub fn projective_transformation<F: Field>(
    a: &ProjPoint<F>,
    b: &ProjPoint<F>,
    c: &ProjPoint<F>,
    d: &ProjPoint<F>,
    a2: &ProjPoint<F>,
    b2: &ProjPoint<F>,
    c2: &ProjPoint<F>,
) -> Result<ProjPoint<F>, GeomError> {
    let target = cross_ratio_pair(a, b, c, d)?;
    let known = [Some(a2.clone()), Some(b2.clone()), Some(c2.clone()), None];
    cross_ratio_solve(&known, a2, b2, &target)
}

/// Straightedge route for [`projective_transformation`]: two perspectivities
/// through randomly chosen auxiliary elements.
pub fn projective_transformation_construction<F: Field>(
    a: &ProjPoint<F>,
    b: &ProjPoint<F>,
    c: &ProjPoint<F>,
    d: &ProjPoint<F>,
    a2: &ProjPoint<F>,
    b2: &ProjPoint<F>,
    c2: &ProjPoint<F>,
    src: &mut RandomSource,
) -> Result<ProjPoint<F>, GeomError> {
    let mut last_err = GeomError::Indeterminate;
    for _ in 0..MAX_RANDOM_RETRIES {
        let attempt = (|| -> Result<ProjPoint<F>, GeomError> {
            let l = src.line_through(a2)?;
            let p = src.point_on(&join(a, a2)?)?;
            let b3 = meet(&l, &join(b, &p)?)?;
            let c3 = meet(&l, &join(c, &p)?)?;
            let q = meet(&join(&b3, b2)?, &join(&c3, c2)?)?;
            let d3 = meet(&l, &join(d, &p)?)?;
            meet(&join(&d3, &q)?, &join(a2, b2)?)
        })();
        match attempt {
            Ok(d2) => return Ok(d2),
            Err(e) => last_err = e,
        }
    }
    Err(last_err)
}

/// Reduces a triple ratio to a cross ratio: returns `P` on the line `AE`
/// with `[A,B,C,D,E,F] = [A,P,E,F]` for every `F` on that line.
pub fn ceva_companion<F: Field>(
    a: &ProjPoint<F>,
    b: &ProjPoint<F>,
    c: &ProjPoint<F>,
    d: &ProjPoint<F>,
    e: &ProjPoint<F>,
) -> Result<ProjPoint<F>, GeomError> {
    if a == d {
        return Err(GeomError::DegenerateConfig("A = D".into()));
    }
    if b == e {
        return Err(GeomError::DegenerateConfig("B = E".into()));
    }
    let q = meet(&join(a, d)?, &join(b, e)?)?;
    meet(&join(c, &q)?, &join(a, e)?)
}

/// Transports a triple-ratio configuration: returns `F'` on line `E'A'` with
/// `[A',B',C',D',E',F'] = [A,B,C,D,E,F]`, via two Ceva reductions and one
/// projective transformation of lines.
pub fn projective_transformation_b<F: Field>(
    unprimed: &[ProjPoint<F>; 6],
    primed: &[ProjPoint<F>; 5],
) -> Result<ProjPoint<F>, GeomError> {
    let [a, b, c, d, e, f] = unprimed;
    let [a2, b2, c2, d2, e2] = primed;
    let p = ceva_companion(a, b, c, d, e)?;
    let p2 = ceva_companion(a2, b2, c2, d2, e2)?;
    projective_transformation(a, &p, e, f, a2, &p2, e2)
}

// ---------------------------------------------------------------------------
// Seeded generic choices.
// ---------------------------------------------------------------------------

/// Deterministic source of generic points, lines, and rational scalars.
///
/// Seeding is a 64-bit value; independent child sources for parallel or
/// per-slot use are derived by changing the stream of the same seed.
pub struct RandomSource {
    seed: u64,
    bound: i64,
    rng: ChaCha8Rng,
}

impl RandomSource {
    pub fn new(seed: u64) -> Self {
        RandomSource::with_bound(seed, 1000)
    }

    pub fn with_bound(seed: u64, bound: i64) -> Self {
        assert!(bound >= 1);
        RandomSource {
            seed,
            bound,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Derives an independent source with the same seed on another stream.
    pub fn child(&self, stream: u64) -> RandomSource {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream);
        RandomSource {
            seed: self.seed,
            bound: self.bound,
            rng,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Small rational with numerator and denominator bounded by the
    /// configured bound.
    pub fn rational(&mut self) -> Rational {
        let num = self.rng.gen_range(-self.bound..=self.bound);
        let den = self.rng.gen_range(1..=self.bound);
        Rational::new(BigInt::from(num), BigInt::from(den))
    }

    pub fn nonzero_rational(&mut self) -> Rational {
        loop {
            let r = self.rational();
            if !r.is_zero() {
                return r;
            }
        }
    }

    pub fn scalar<F: Field>(&mut self) -> F {
        F::from_rational(&self.rational())
    }

    pub fn point<F: Field>(&mut self) -> ProjPoint<F> {
        loop {
            let coords = [self.scalar(), self.scalar(), self.scalar()];
            if let Ok(p) = ProjPoint::new(coords) {
                return p;
            }
        }
    }

    pub fn line<F: Field>(&mut self) -> ProjLine<F> {
        loop {
            let p: ProjPoint<F> = self.point();
            let q: ProjPoint<F> = self.point();
            if let Ok(l) = join(&p, &q) {
                return l;
            }
        }
    }

    /// Random point on a given line, as the meet of a random line with it.
    pub fn point_on<F: Field>(&mut self, l: &ProjLine<F>) -> Result<ProjPoint<F>, GeomError> {
        for _ in 0..MAX_RANDOM_RETRIES {
            let m: ProjLine<F> = self.line();
            if let Ok(p) = meet(&m, l) {
                return Ok(p);
            }
        }
        Err(GeomError::DegenerateConfig(
            "failed to sample a point on the line".into(),
        ))
    }

    /// Random line through a given point, as the join with a random point.
    pub fn line_through<F: Field>(&mut self, p: &ProjPoint<F>) -> Result<ProjLine<F>, GeomError> {
        for _ in 0..MAX_RANDOM_RETRIES {
            let q: ProjPoint<F> = self.point();
            if let Ok(l) = join(p, &q) {
                return Ok(l);
            }
        }
        Err(GeomError::DegenerateConfig(
            "failed to sample a line through the point".into(),
        ))
    }

    /// Random invertible 3x3 matrix (a generic projective transformation).
    pub fn matrix<F: Field>(&mut self) -> Mat3<F> {
        loop {
            let mut m: Mat3<F> = mat_zero();
            for row in &mut m {
                for entry in row.iter_mut() {
                    *entry = self.scalar();
                }
            }
            if !mat_det(&m).is_zero() {
                return m;
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Exact-coordinate specializations.
// ---------------------------------------------------------------------------

impl ProjPoint<Rational> {
    /// Canonical integer representative: denominators cleared, content
    /// removed, first nonzero coordinate positive.
    pub fn primitive(&self) -> [BigInt; 3] {
        primitive_triple(&self.coords)
    }
}

impl ProjLine<Rational> {
    pub fn primitive(&self) -> [BigInt; 3] {
        primitive_triple(&self.coords)
    }
}

pub(crate) fn primitive_triple(coords: &[Rational; 3]) -> [BigInt; 3] {
    let lcm = coords
        .iter()
        .fold(BigInt::one(), |acc, c| acc.lcm(c.denom()));
    let mut ints: Vec<BigInt> = coords.iter().map(|c| c.numer() * &lcm / c.denom()).collect();
    let mut g = BigInt::zero();
    for v in &ints {
        g = g.gcd(v);
    }
    if !g.is_zero() && !g.is_one() {
        for v in &mut ints {
            *v = &*v / &g;
        }
    }
    if ints.iter().find(|v| !v.is_zero()).map_or(false, |v| v.is_negative()) {
        for v in &mut ints {
            *v = -std::mem::take(v);
        }
    }
    [ints[0].clone(), ints[1].clone(), ints[2].clone()]
}

/// Rescales a rational-function triple to coprime polynomial coordinates:
/// denominators cleared and the common polynomial factor (including content)
/// removed.  The result has a well-defined nonzero value at `t = 0`.
pub(crate) fn poly_normalized_triple(coords: &[RatFunc; 3]) -> [RatFunc; 3] {
    debug_assert!(!coords.iter().all(|c| c.is_zero()));
    // Clear denominators: multiply each coordinate by the product of the
    // other two denominators.
    let polys: Vec<Poly> = (0..3)
        .map(|i| {
            let mut p = coords[i].num().clone();
            for (j, c) in coords.iter().enumerate() {
                if j != i {
                    p = &p * c.den();
                }
            }
            p
        })
        .collect();
    let mut g = Poly::zero();
    for p in &polys {
        g = Poly::gcd(&g, p);
    }
    let mut out: Vec<Poly> = polys
        .iter()
        .map(|p| p.div_exact(&g).expect("gcd divides"))
        .collect();
    if out
        .iter()
        .find(|p| !p.is_zero())
        .map_or(false, |p| p.leading().unwrap().is_negative())
    {
        out = out.into_iter().map(|p| -p).collect();
    }
    [
        RatFunc::from_poly(out[0].clone()),
        RatFunc::from_poly(out[1].clone()),
        RatFunc::from_poly(out[2].clone()),
    ]
}

impl ProjPoint<RatFunc> {
    /// Coprime-polynomial representative of the coordinate triple.
    pub fn poly_normalized(&self) -> ProjPoint<RatFunc> {
        ProjPoint {
            coords: poly_normalized_triple(&self.coords),
        }
    }

    /// Exact limit at `t = 0` after renormalization; always defined because
    /// the coprime representative does not vanish identically at 0.
    pub fn limit_at_zero(&self) -> Result<ProjPoint<Rational>, GeomError> {
        let n = poly_normalized_triple(&self.coords);
        let coords = [
            n[0].limit_at_zero()?,
            n[1].limit_at_zero()?,
            n[2].limit_at_zero()?,
        ];
        ProjPoint::new(coords)
    }
}

impl ProjLine<RatFunc> {
    pub fn poly_normalized(&self) -> ProjLine<RatFunc> {
        ProjLine {
            coords: poly_normalized_triple(&self.coords),
        }
    }

    pub fn limit_at_zero(&self) -> Result<ProjLine<Rational>, GeomError> {
        let p = self.dual().limit_at_zero()?;
        Ok(p.dual())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::rational;

    type QPoint = ProjPoint<Rational>;

    fn pt(x: i64, y: i64, z: i64) -> QPoint {
        ProjPoint::from_ints(x, y, z)
    }

    fn affine(x: Rational, y: Rational) -> QPoint {
        ProjPoint::from_affine(x, y)
    }

    /// Point with affine parameter `p` on the x-axis.
    fn param(p: i64) -> QPoint {
        pt(p, 0, 1)
    }

    fn param_q(p: Rational) -> QPoint {
        affine(p, Rational::zero())
    }

    #[test]
    fn join_and_meet_examples() {
        let l = join(&pt(1, 0, 1), &pt(0, 1, 1)).unwrap();
        assert_eq!(l, ProjLine::from_ints(-1, -1, 1));
        let p = meet(&ProjLine::from_ints(1, 0, 0), &ProjLine::from_ints(0, 1, 0)).unwrap();
        assert_eq!(p, pt(0, 0, 1));
        assert_eq!(
            join(&pt(1, 2, 3), &pt(2, 4, 6)).unwrap_err(),
            GeomError::DegenerateJoinMeet
        );
    }

    #[test]
    fn incidence_and_duality() {
        let p = pt(1, 2, 3);
        let q = pt(-1, 0, 5);
        let l = join(&p, &q).unwrap();
        assert!(incident(&p, &l));
        assert!(incident(&q, &l));
        // Dual: the meet of the dual lines is the dual of the join.
        let m = meet(&p.dual(), &q.dual()).unwrap();
        assert_eq!(m, l.dual());
    }

    #[test]
    fn cross_ratio_affine_example() {
        let v = cross_ratio(&param(0), &param(1), &param(2), &param(3)).unwrap();
        assert_eq!(v, rational(-1, 3));
    }

    #[test]
    fn cross_ratio_rejects_repeats_and_noncollinear() {
        assert_eq!(
            cross_ratio(&param(0), &param(1), &param(2), &param(0)).unwrap_err(),
            GeomError::RepeatedPoint
        );
        assert_eq!(
            cross_ratio(&param(0), &param(1), &param(2), &pt(0, 1, 1)).unwrap_err(),
            GeomError::NotCollinear
        );
    }

    #[test]
    fn cross_ratio_is_projectively_invariant() {
        let mut src = RandomSource::with_bound(7, 40);
        for _ in 0..20 {
            let ps = [param(-2), param(1), param(4), param(9)];
            let v = cross_ratio(&ps[0], &ps[1], &ps[2], &ps[3]).unwrap();
            let m: Mat3<Rational> = src.matrix();
            let imgs: Vec<QPoint> = ps.iter().map(|p| apply_to_point(&m, p).unwrap()).collect();
            let w = cross_ratio(&imgs[0], &imgs[1], &imgs[2], &imgs[3]).unwrap();
            assert_eq!(v, w);
        }
    }

    #[test]
    fn cross_ratio_of_lines_through_a_pencil() {
        // Four lines through the origin hitting the line y = 1 at parameters
        // 0, 1, 2, 3 have the same cross ratio as those parameters.
        let through = |x: i64| join(&pt(0, 0, 1), &pt(x, 1, 1)).unwrap();
        let v = cross_ratio_lines(&through(0), &through(1), &through(2), &through(3)).unwrap();
        assert_eq!(v, rational(-1, 3));
    }

    #[test]
    fn triple_ratio_menelaus_is_minus_one() {
        let a = affine(rational(0, 1), rational(0, 1));
        let b = affine(rational(1, 2), rational(0, 1));
        let c = affine(rational(2, 1), rational(0, 1));
        let d = affine(rational(-1, 1), rational(3, 1));
        let e = affine(rational(0, 1), rational(2, 1));
        let f = affine(rational(0, 1), rational(1, 1));
        let v = triple_ratio(&[a, b, c, d, e, f]).unwrap();
        assert_eq!(v, rational(-1, 1));
    }

    #[test]
    fn triple_ratio_ceva_medians_is_plus_one() {
        let a = pt(0, 0, 1);
        let b = pt(4, 0, 1);
        let c = pt(0, 4, 1);
        let ab_mid = pt(2, 0, 1);
        let bc_mid = pt(2, 2, 1);
        let ca_mid = pt(0, 2, 1);
        let v = triple_ratio(&[a, ab_mid, b, bc_mid, c, ca_mid]).unwrap();
        assert_eq!(v, rational(1, 1));
    }

    #[test]
    fn triple_ratio_collapsed_odd_points_is_minus_one() {
        // P1 = P3 = P5: every factor degenerates to -1, so the product is -1.
        let p = pt(1, 1, 1);
        let x = pt(3, 1, 1);
        let y = pt(1, 5, 1);
        let z = pt(0, 7, 1);
        let v = triple_ratio(&[p.clone(), x, p.clone(), y, p, z]).unwrap();
        assert_eq!(v, rational(-1, 1));
    }

    #[test]
    fn triple_ratio_inversion_identity() {
        let mut src = RandomSource::with_bound(11, 30);
        let mut checked = 0;
        for _ in 0..100 {
            let a: QPoint = src.point();
            let c: QPoint = src.point();
            let e: QPoint = src.point();
            if collinear(&a, &c, &e) {
                continue;
            }
            let b = src.point_on(&join(&a, &c).unwrap()).unwrap();
            let d = src.point_on(&join(&c, &e).unwrap()).unwrap();
            let f = src.point_on(&join(&e, &a).unwrap()).unwrap();
            let fwd = triple_ratio(&[a.clone(), b.clone(), c.clone(), d.clone(), e.clone(), f.clone()]);
            let bwd = triple_ratio(&[a, f, e, d, c, b]);
            if let (Ok(x), Ok(y)) = (fwd, bwd) {
                assert_eq!(x * y, Rational::one());
                checked += 1;
            }
        }
        assert!(checked >= 10);
    }

    #[test]
    fn triple_conjugate_affine_examples() {
        // [0,1,2,3,5,x] = -1 has solution x = -5.
        let ps = [param(0), param(1), param(2), param(3), param(5)];
        let f = triple_conjugate(&ps).unwrap();
        assert_eq!(f, param(-5));
        // [0,1,2,3,4,x] = -1 forces the point at infinity of the axis.
        let ps = [param(0), param(1), param(2), param(3), param(4)];
        let f = triple_conjugate(&ps).unwrap();
        assert_eq!(f, pt(1, 0, 0));
        // Verify the defining identity in a generic case.
        let ps = [param(0), param(1), param(2), param(3), param(7)];
        let f = triple_conjugate(&ps).unwrap();
        let v = triple_ratio(&[
            ps[0].clone(),
            ps[1].clone(),
            ps[2].clone(),
            ps[3].clone(),
            ps[4].clone(),
            f,
        ])
        .unwrap();
        assert_eq!(v, rational(-1, 1));
    }

    #[test]
    fn triple_conjugate_indeterminate_case() {
        let ps = [param(0), param(1), param(2), param(1), param(0)];
        assert_eq!(triple_conjugate(&ps).unwrap_err(), GeomError::Indeterminate);
    }

    #[test]
    fn triple_conjugate_construction_agrees_with_solver() {
        let ps = [param(0), param(1), param(2), param(3), param(7)];
        let algebraic = triple_conjugate(&ps).unwrap();
        for seed in [5u64, 99u64] {
            let mut src = RandomSource::new(seed);
            let built = triple_conjugate_construction(&ps, &mut src).unwrap();
            assert_eq!(built, algebraic);
        }
    }

    #[test]
    fn projective_transformation_parameter_examples() {
        // Target line: the y-axis with parameter points at y = 0, 1, 2.
        let yaxis = |p: i64| pt(0, p, 1);
        let d2 = projective_transformation(
            &param(0),
            &param(1),
            &param(2),
            &param(3),
            &yaxis(0),
            &yaxis(1),
            &yaxis(2),
        )
        .unwrap();
        assert_eq!(d2, yaxis(3));
        // (0,1,2,3) -> (0,1,3) sends 3 to 9.
        let d2 = projective_transformation(
            &param(0),
            &param(1),
            &param(2),
            &param(3),
            &yaxis(0),
            &yaxis(1),
            &yaxis(3),
        )
        .unwrap();
        assert_eq!(d2, yaxis(9));
        // D = C maps to C'.
        let d2 = projective_transformation(
            &param(0),
            &param(1),
            &param(2),
            &param(2),
            &yaxis(0),
            &yaxis(1),
            &yaxis(3),
        )
        .unwrap();
        assert_eq!(d2, yaxis(3));
    }

    #[test]
    fn projective_transformation_construction_agrees() {
        // The perspectivity construction needs the primed points off the
        // source line, so keep the target triple away from the x-axis.
        let yaxis = |p: i64| pt(0, p, 1);
        let algebraic = projective_transformation(
            &param(-1),
            &param(2),
            &param(5),
            &param(11),
            &yaxis(1),
            &yaxis(2),
            &yaxis(4),
        )
        .unwrap();
        for seed in [3u64, 123u64] {
            let mut src = RandomSource::new(seed);
            let built = projective_transformation_construction(
                &param(-1),
                &param(2),
                &param(5),
                &param(11),
                &yaxis(1),
                &yaxis(2),
                &yaxis(4),
                &mut src,
            )
            .unwrap();
            assert_eq!(built, algebraic);
        }
    }

    #[test]
    fn ceva_companion_reduces_triple_ratio_to_cross_ratio() {
        let mut src = RandomSource::with_bound(17, 25);
        let mut checked = 0;
        for _ in 0..200 {
            if checked >= 10 {
                break;
            }
            let a: QPoint = src.point();
            let c: QPoint = src.point();
            let e: QPoint = src.point();
            if collinear(&a, &c, &e) {
                continue;
            }
            let b = src.point_on(&join(&a, &c).unwrap()).unwrap();
            let d = src.point_on(&join(&c, &e).unwrap()).unwrap();
            let f = src.point_on(&join(&e, &a).unwrap()).unwrap();
            let p = match ceva_companion(&a, &b, &c, &d, &e) {
                Ok(p) => p,
                Err(_) => continue,
            };
            let lhs = triple_ratio(&[a.clone(), b, c, d, e.clone(), f.clone()]);
            let rhs = cross_ratio(&a, &p, &e, &f);
            if let (Ok(x), Ok(y)) = (lhs, rhs) {
                assert_eq!(x, y);
                checked += 1;
            }
        }
        assert!(checked >= 10);
    }

    #[test]
    fn ceva_companion_midpoint_symmetry() {
        // B, D midpoints of AC, CE: the companion is the midpoint of AE.
        let a = pt(0, 0, 1);
        let c = pt(2, 4, 1);
        let e = pt(4, 0, 1);
        let b = pt(1, 2, 1);
        let d = pt(3, 2, 1);
        let p = ceva_companion(&a, &b, &c, &d, &e).unwrap();
        assert_eq!(p, pt(2, 0, 1));
        assert_eq!(
            ceva_companion(&a, &b, &c, &d, &b).unwrap_err(),
            GeomError::DegenerateConfig("B = E".into())
        );
        assert_eq!(
            ceva_companion(&a, &b, &c, &a, &e).unwrap_err(),
            GeomError::DegenerateConfig("A = D".into())
        );
    }

    #[test]
    fn projective_transformation_b_identity_and_menelaus() {
        let mut src = RandomSource::with_bound(23, 25);
        let mut done = false;
        for _ in 0..200 {
            let a: QPoint = src.point();
            let c: QPoint = src.point();
            let e: QPoint = src.point();
            if collinear(&a, &c, &e) {
                continue;
            }
            let b = src.point_on(&join(&a, &c).unwrap()).unwrap();
            let d = src.point_on(&join(&c, &e).unwrap()).unwrap();
            let f = src.point_on(&join(&e, &a).unwrap()).unwrap();
            let six = [a.clone(), b.clone(), c.clone(), d.clone(), e.clone(), f.clone()];
            let five = [a.clone(), b.clone(), c.clone(), d.clone(), e.clone()];
            if let Ok(f2) = projective_transformation_b(&six, &five) {
                assert_eq!(f2, f);
                done = true;
                break;
            }
        }
        assert!(done);
    }

    #[test]
    fn projective_transformation_b_preserves_triple_ratio() {
        let mut src = RandomSource::with_bound(29, 25);
        let mut checked = 0;
        for _ in 0..200 {
            if checked >= 5 {
                break;
            }
            // Source configuration with a known sixth point.
            let a: QPoint = src.point();
            let c: QPoint = src.point();
            let e: QPoint = src.point();
            if collinear(&a, &c, &e) {
                continue;
            }
            let b = src.point_on(&join(&a, &c).unwrap()).unwrap();
            let d = src.point_on(&join(&c, &e).unwrap()).unwrap();
            let f = src.point_on(&join(&e, &a).unwrap()).unwrap();
            // Independent target configuration (first five points only).
            let a2: QPoint = src.point();
            let c2: QPoint = src.point();
            let e2: QPoint = src.point();
            if collinear(&a2, &c2, &e2) {
                continue;
            }
            let b2 = src.point_on(&join(&a2, &c2).unwrap()).unwrap();
            let d2 = src.point_on(&join(&c2, &e2).unwrap()).unwrap();
            let six = [a.clone(), b, c, d, e.clone(), f];
            let five = [a2.clone(), b2.clone(), c2.clone(), d2.clone(), e2.clone()];
            let f2 = match projective_transformation_b(&six, &five) {
                Ok(p) => p,
                Err(_) => continue,
            };
            let source = match triple_ratio(&six) {
                Ok(v) => v,
                Err(_) => continue,
            };
            let image = match triple_ratio(&[a2, b2, c2, d2, e2, f2]) {
                Ok(v) => v,
                Err(_) => continue,
            };
            assert_eq!(source, image);
            checked += 1;
        }
        assert!(checked >= 5);
    }

    #[test]
    fn multi_ratio_solve_recovers_deleted_point() {
        // Build a generic configuration, delete one point, re-solve for it.
        let mut src = RandomSource::with_bound(31, 25);
        let a: QPoint = src.point();
        let c: QPoint = src.point();
        let e: QPoint = src.point();
        assert!(!collinear(&a, &c, &e));
        let b = src.point_on(&join(&a, &c).unwrap()).unwrap();
        let d = src.point_on(&join(&c, &e).unwrap()).unwrap();
        let f = src.point_on(&join(&e, &a).unwrap()).unwrap();
        let all = [a.clone(), b.clone(), c.clone(), d.clone(), e.clone(), f.clone()];
        let v = triple_ratio(&all).unwrap();
        let target = (v, Rational::one());
        // Middle slot: recover b on line AC.
        let known = [Some(a.clone()), None, Some(c.clone()), Some(d.clone()), Some(e.clone()), Some(f.clone())];
        let got = multi_ratio_solve(&known, &a, &c, &target).unwrap();
        assert_eq!(got, b);
        // End slot: recover c, which lies on both lines; anchors span line AC.
        let known = [Some(a.clone()), Some(b.clone()), None, Some(d.clone()), Some(e.clone()), Some(f.clone())];
        let got = multi_ratio_solve(&known, &a, &b, &target).unwrap();
        assert_eq!(got, c);
    }

    #[test]
    fn random_source_is_deterministic_and_incident() {
        let mut s1 = RandomSource::new(42);
        let mut s2 = RandomSource::new(42);
        let p1: QPoint = s1.point();
        let p2: QPoint = s2.point();
        assert_eq!(p1.coords(), p2.coords());
        let l: ProjLine<Rational> = s1.line();
        let q = s1.point_on(&l).unwrap();
        assert!(incident(&q, &l));
        let m = s1.line_through(&p1).unwrap();
        assert!(incident(&p1, &m));
        // Distinct streams differ.
        let mut c1 = s1.child(1);
        let mut c2 = s1.child(2);
        let r1: QPoint = c1.point();
        let r2: QPoint = c2.point();
        assert_ne!(r1.coords(), r2.coords());
    }

    #[test]
    fn primitive_representative_is_canonical() {
        let p = ProjPoint::new([rational(2, 3), rational(-4, 3), rational(2, 1)]).unwrap();
        assert_eq!(
            p.primitive(),
            [BigInt::from(1), BigInt::from(-2), BigInt::from(3)]
        );
        let q = ProjPoint::new([rational(0, 1), rational(-1, 2), rational(-3, 2)]).unwrap();
        assert_eq!(
            q.primitive(),
            [BigInt::from(0), BigInt::from(1), BigInt::from(3)]
        );
    }

    #[test]
    fn ratfunc_limits_of_normalized_triples() {
        use crate::scalar::RatFunc;
        // Point ((1+t)/t, 1/t, 1) has a well-defined projective limit (1, 1, 0) + t(...).
        let t = RatFunc::t();
        let one = RatFunc::one();
        let p = ProjPoint::new([
            (one.clone() + t.clone()).checked_div(&t).unwrap(),
            one.clone().checked_div(&t).unwrap(),
            one.clone(),
        ])
        .unwrap();
        let lim = p.limit_at_zero().unwrap();
        assert_eq!(lim, ProjPoint::from_ints(1, 1, 0));
    }

    #[test]
    fn matrix_inverse_and_adjugate() {
        let m: Mat3<Rational> = mat_from_i64([[2, 1, 0], [0, 1, 3], [1, 0, 1]]);
        let inv = mat_inverse(&m).unwrap();
        let id = mat_mul(&m, &inv);
        assert_eq!(id, mat_identity());
        let p = pt(3, -1, 2);
        let l = join(&p, &pt(0, 5, 1)).unwrap();
        let mp = apply_to_point(&m, &p).unwrap();
        let ml = apply_to_line(&m, &l).unwrap();
        assert!(incident(&mp, &ml));
    }

    #[test]
    fn cross_ratio_solve_handles_rational_targets() {
        // [0, 1, 2, x] = -1/3 should give x = 3.
        let known = [Some(param(0)), Some(param(1)), Some(param(2)), None];
        let target = (rational(-1, 3), Rational::one());
        let got = cross_ratio_solve(&known, &param(0), &param(1), &target).unwrap();
        assert_eq!(got, param(3));
        // Infinite target: [0, 1, 2, x] = infinity forces x = 0-companion
        // (denominator vanishes at x = a).
        let target = (Rational::one(), Rational::zero());
        let got = cross_ratio_solve(&known, &param(0), &param(1), &target).unwrap();
        assert_eq!(got, param(0));
    }

    #[test]
    fn solved_points_respect_scaled_inputs() {
        // Scaling input coordinates must not change solutions (projectivity).
        let scale = |p: &QPoint, k: i64| {
            ProjPoint::new([
                p.coords()[0].clone() * rational(k, 1),
                p.coords()[1].clone() * rational(k, 1),
                p.coords()[2].clone() * rational(k, 1),
            ])
            .unwrap()
        };
        let ps = [param(0), param(1), param(2), param(3), param(7)];
        let scaled = [
            scale(&ps[0], 3),
            scale(&ps[1], -2),
            scale(&ps[2], 5),
            scale(&ps[3], 7),
            scale(&ps[4], -11),
        ];
        assert_eq!(
            triple_conjugate(&ps).unwrap(),
            triple_conjugate(&scaled).unwrap()
        );
    }

    #[test]
    fn param_q_matches_param() {
        assert_eq!(param_q(rational(4, 1)), param(4));
    }
}
