//! Desingularization of the pentagram map.
//!
//! A polygon with a collapse pattern among its vertices is a singular point
//! of the first few powers of the pentagram map, yet the first regular power
//! has a well-defined value there.  This module computes that value three
//! ways and cross-checks them: an exact deformation-limit oracle over the
//! field of rational functions ([`DeformationOracle`], [`oracle_iterate`]),
//! closed straightedge constructions for the two smallest collapse patterns
//! ([`t3_on_xi`], [`t4_on_x35`]), and the general algorithm driven by
//! decorated polygons ([`main`]).

use crate::decorated::{
    decorate_randomly, decoration_from_curve, deform_along, limit_matrix, line_at, mono_power,
    point_at, polygon_allowing_degenerate, slot_at, t_tilde, t_tilde2, DecoratedError,
    DecoratedPolygon,
};
use crate::polygon::{format_index, Indexing, PolygonError, TwistedPolygon};
use crate::projective::{
    apply_to_line, apply_to_point, concurrent, incident, join, meet, triple_conjugate, GeomError,
    Mat3, ProjLine, ProjPoint, RandomSource, MAX_RANDOM_RETRIES,
};
use crate::scalar::{RatFunc, Rational};
use serde::Serialize;

/// Errors from desingularization constructions.
#[derive(Debug, Clone, thiserror::Error)]
pub enum DesingError {
    /// The polygon's singularity type does not match the construction.
    #[error("singularity type not supported here: {0}")]
    WrongType(String),
    /// The sampled deformation curve hit an accidental degeneracy.
    #[error("deformation curve is not generic: {0}")]
    CurveNotGeneric(String),
    /// An intermediate fact of the construction failed, indicating extra
    /// degeneracies beyond the declared singularity type.
    #[error("unexpected degeneracy at {index}: {detail}")]
    UnexpectedDegeneracy { index: String, detail: String },
    /// Underlying decorated-polygon failure.
    #[error(transparent)]
    Decorated(#[from] DecoratedError),
    /// Underlying polygon failure.
    #[error(transparent)]
    Polygon(#[from] PolygonError),
    /// Underlying projective-geometry failure.
    #[error(transparent)]
    Geom(#[from] GeomError),
}

fn unexpected(d: i64, detail: &str) -> DesingError {
    DesingError::UnexpectedDegeneracy {
        index: format_index(d),
        detail: detail.into(),
    }
}

/// One pentagram step over the function field.  The map is applied join by
/// join and meet by meet, rescaling every intermediate to a primitive
/// polynomial triple; general position over the function field is implied by
/// the joins and meets succeeding, so no extra check is run.
fn pentagram_step_normalized(
    curve: &TwistedPolygon<RatFunc>,
) -> Result<TwistedPolygon<RatFunc>, DesingError> {
    let not_generic = |e: GeomError| DesingError::CurveNotGeneric(e.to_string());
    let n = curve.n();
    let mono = curve.monodromy().clone();
    let vp = curve.indexing().vertex_parity();
    let mut diagonals: Vec<ProjLine<RatFunc>> = Vec::with_capacity(n);
    for t in 0..n {
        let e = 2 * t as i64 + vp;
        let line = join(&curve.vertex(e - 2), &curve.vertex(e + 2)).map_err(not_generic)?;
        diagonals.push(line.poly_normalized());
    }
    let mut base: Vec<ProjPoint<RatFunc>> = Vec::with_capacity(n);
    for t in 0..n {
        let f = 2 * t as i64 + (1 - vp);
        let p = meet(
            &line_at(&diagonals, &mono, vp, f - 1),
            &line_at(&diagonals, &mono, vp, f + 1),
        )
        .map_err(not_generic)?;
        base.push(p.poly_normalized());
    }
    Ok(
        TwistedPolygon::new(curve.indexing().opposite(), base, mono, true)
            .map_err(|e| DesingError::CurveNotGeneric(e.to_string()))?,
    )
}

fn limit_of_curve(curve: &TwistedPolygon<RatFunc>) -> Result<TwistedPolygon<Rational>, DesingError> {
    let mono0 = limit_matrix(curve.monodromy())?;
    let vp = curve.indexing().vertex_parity();
    let mut base = Vec::with_capacity(curve.n());
    for t in 0..curve.n() {
        let d = 2 * t as i64 + vp;
        let v = curve.vertex(d).limit_at_zero().map_err(|_| {
            DesingError::CurveNotGeneric(format!("no limit at vertex {}", format_index(d)))
        })?;
        base.push(v);
    }
    Ok(polygon_allowing_degenerate(curve.indexing(), base, mono0)?)
}

/// A one-parameter deformation `A(t)` of a rational polygon, exact over the
/// field of rational functions in `t`.  Pentagram iterates of the curve stay
/// well defined as long as the chosen directions are generic, and their
/// values at `t = 0` define the desingularized iterates of `A(0)`.
#[derive(Clone, Debug)]
pub struct DeformationOracle {
    curve: TwistedPolygon<RatFunc>,
}

impl DeformationOracle {
    /// Deforms `a` along explicit per-vertex directions.
    pub fn new(
        a: &TwistedPolygon<Rational>,
        directions: &[[Rational; 3]],
    ) -> Result<DeformationOracle, DesingError> {
        Ok(DeformationOracle {
            curve: deform_along(a, directions)?,
        })
    }

    /// Deforms `a` along seeded random directions.
    pub fn random(a: &TwistedPolygon<Rational>, seed: u64) -> Result<DeformationOracle, DesingError> {
        let mut src = RandomSource::new(seed);
        let directions: Vec<[Rational; 3]> = (0..a.n())
            .map(|_| src.point::<Rational>().into_coords())
            .collect();
        DeformationOracle::new(a, &directions)
    }

    /// The deformation curve itself.
    pub fn curve(&self) -> &TwistedPolygon<RatFunc> {
        &self.curve
    }

    /// The limit at `t = 0` of the `k`-th pentagram iterate of the curve.
    pub fn iterate(&self, k: usize) -> Result<TwistedPolygon<Rational>, DesingError> {
        limit_of_curve(&self.iterated_curve(k)?)
    }

    /// Like [`DeformationOracle::iterate`], but also carries the limit
    /// decorations induced by the curve.
    pub fn decorated_iterate(&self, k: usize) -> Result<DecoratedPolygon<Rational>, DesingError> {
        let moved = self.iterated_curve(k)?;
        Ok(decoration_from_curve(&moved)?)
    }

    fn iterated_curve(&self, k: usize) -> Result<TwistedPolygon<RatFunc>, DesingError> {
        let mut moved = self.curve.clone();
        for _ in 0..k {
            moved = pentagram_step_normalized(&moved)?;
        }
        Ok(moved)
    }
}

/// The limit at `t = 0` of `T^k(A + tV)` for a seeded random direction `V`,
/// resampling `V` when a draw is not generic.
pub fn oracle_iterate(
    a: &TwistedPolygon<Rational>,
    k: usize,
    seed: u64,
) -> Result<TwistedPolygon<Rational>, DesingError> {
    let src = RandomSource::new(seed);
    let mut last = DesingError::CurveNotGeneric("no deformation direction was generic".into());
    for attempt in 0..MAX_RANDOM_RETRIES {
        match DeformationOracle::random(a, src.child(attempt as u64).seed())
            .and_then(|o| o.iterate(k))
        {
            Ok(p) => return Ok(p),
            Err(e) => last = e,
        }
    }
    Err(last)
}

fn triple_conjugate_lines(
    ls: &[ProjLine<Rational>; 5],
) -> Result<ProjLine<Rational>, GeomError> {
    let pts: [ProjPoint<Rational>; 5] = std::array::from_fn(|i| ls[i].dual());
    Ok(triple_conjugate(&pts)?.dual())
}

fn opt_point_at(
    base: &[Option<ProjPoint<Rational>>],
    mono: &Mat3<Rational>,
    parity: i64,
    d: i64,
) -> Option<ProjPoint<Rational>> {
    let (pos, q) = slot_at(base.len(), parity, d);
    let p = base[pos].as_ref()?;
    if q == 0 {
        return Some(p.clone());
    }
    Some(apply_to_point(&mono_power(mono, q), p).expect("monodromy transport is invertible"))
}

/// Stores a plane point known at doubled index `d` into its slot, undoing
/// the monodromy transport when `d` lies outside the base window.
fn store_point(
    base: &mut [Option<ProjPoint<Rational>>],
    mono: &Mat3<Rational>,
    parity: i64,
    d: i64,
    v: ProjPoint<Rational>,
) {
    let (pos, q) = slot_at(base.len(), parity, d);
    base[pos] = Some(if q == 0 {
        v
    } else {
        apply_to_point(&mono_power(mono, -q), &v).expect("monodromy transport is invertible")
    });
}

/// Line counterpart of [`store_point`] for dense slot families.
fn store_line(
    base: &mut [ProjLine<Rational>],
    mono: &Mat3<Rational>,
    parity: i64,
    d: i64,
    v: ProjLine<Rational>,
) {
    let (pos, q) = slot_at(base.len(), parity, d);
    base[pos] = if q == 0 {
        v
    } else {
        apply_to_line(&mono_power(mono, -q), &v).expect("monodromy transport is invertible")
    };
}

/// The third pentagram power on a polygon with one collapsed vertex triple.
///
/// The polygon must have singularity type `{i}`: the vertices `i - 1`, `i`,
/// `i + 1` of the first iterate collapse because `A_{i-2}`, `A_i`, `A_{i+2}`
/// lie on a common line `l`.  The first two iterates are built directly; the
/// one vertex of the second iterate that the meets cannot produce is the
/// six-point-ratio conjugate of the collapse point, its matching side of the
/// third iterate the dual conjugate, and the rest follows the ordinary map.
/// The result equals the deformation limit and lies in the dual collapse
/// variety: three alternating sides around `i` are concurrent.
pub fn t3_on_xi(a: &TwistedPolygon<Rational>) -> Result<TwistedPolygon<Rational>, DesingError> {
    let ty = a.singularity_type();
    if ty.len() != 1 {
        return Err(DesingError::WrongType(format!(
            "expected exactly one collapsed label, found {ty:?}"
        )));
    }
    let n = a.n();
    let i = *ty.iter().next().expect("nonempty type");
    let t0 = i.rem_euclid(n as i64) as usize;
    let g0 = 2 * t0 as i64;
    let mono = a.monodromy().clone();

    // Sides of the first iterate: short diagonals of the input.
    let mut b: Vec<ProjLine<Rational>> = Vec::with_capacity(n);
    for t in 0..n {
        let e = 2 * t as i64;
        b.push(join(&a.vertex(e - 2), &a.vertex(e + 2))?);
    }
    let b_at = |d: i64| line_at(&b, &mono, 0, d);
    let l = b_at(g0 - 2);
    if b_at(g0 + 2) != l {
        return Err(unexpected(g0, "the two flanking diagonals do not merge"));
    }

    // Vertices of the first iterate.
    let mut bv: Vec<ProjPoint<Rational>> = Vec::with_capacity(n);
    for t in 0..n {
        let f = 2 * t as i64 + 1;
        bv.push(meet(&b_at(f - 1), &b_at(f + 1))?);
    }
    let bv_at = |d: i64| point_at(&bv, &mono, 1, d);
    let pinch = bv_at(g0 - 1);
    if bv_at(g0 + 1) != pinch || pinch != meet(&l, &b_at(g0))? {
        return Err(unexpected(g0, "the pinch point is not where it should be"));
    }

    // Sides of the second iterate.
    let mut c: Vec<ProjLine<Rational>> = Vec::with_capacity(n);
    for t in 0..n {
        let h = 2 * t as i64 + 1;
        c.push(join(&bv_at(h - 2), &bv_at(h + 2))?);
    }
    let c_at = |d: i64| line_at(&c, &mono, 1, d);
    if c_at(g0 - 1) != l || c_at(g0 + 1) != l {
        return Err(unexpected(g0, "the second-iterate sides do not collapse onto the line"));
    }

    // Vertices of the second iterate; the central one is the six-point
    // conjugate of the collapse data on the common line.
    let mut cv: Vec<ProjPoint<Rational>> = Vec::with_capacity(n);
    for t in 0..n {
        let g = 2 * t as i64;
        if t == t0 {
            cv.push(triple_conjugate(&[
                bv_at(g0 - 3),
                bv_at(g0 - 1),
                a.vertex(g0),
                bv_at(g0 + 3),
                bv_at(g0 + 1),
            ])?);
        } else {
            cv.push(meet(&c_at(g - 1), &c_at(g + 1))?);
        }
    }
    let cv_at = |d: i64| point_at(&cv, &mono, 0, d);
    if cv_at(g0 - 2) != pinch || cv_at(g0 + 2) != pinch {
        return Err(unexpected(g0, "the flanking second-iterate vertices miss the pinch point"));
    }

    // Sides of the third iterate; the central one is the dual conjugate.
    let mut d_lines: Vec<ProjLine<Rational>> = Vec::with_capacity(n);
    for t in 0..n {
        let e = 2 * t as i64;
        if t == t0 {
            d_lines.push(triple_conjugate_lines(&[
                c_at(g0 - 3),
                c_at(g0 + 1),
                b_at(g0),
                c_at(g0 + 3),
                c_at(g0 - 1),
            ])?);
        } else {
            d_lines.push(join(&cv_at(e - 2), &cv_at(e + 2))?);
        }
    }
    let d_at = |d: i64| line_at(&d_lines, &mono, 0, d);
    if !concurrent(&d_at(g0 - 4), &d_at(g0), &d_at(g0 + 4)) {
        return Err(unexpected(g0, "the image does not land in the dual collapse variety"));
    }

    // Vertices of the third iterate.
    let mut dv: Vec<ProjPoint<Rational>> = Vec::with_capacity(n);
    for t in 0..n {
        let f = 2 * t as i64 + 1;
        dv.push(meet(&d_at(f - 1), &d_at(f + 1))?);
    }
    Ok(polygon_allowing_degenerate(
        Indexing::HalfInteger,
        dv,
        mono,
    )?)
}

/// The fourth pentagram power on a polygon with two overlapping collapsed
/// vertex triples.
///
/// The polygon must have singularity type `{i-1, i+1}`, which means the four
/// vertices `A_{i-3}, A_{i-1}, A_{i+1}, A_{i+3}` lie on a common line `l`.
/// The two outer unknown vertices of the second iterate are six-point
/// conjugates; the central one is genuinely not well defined, but every side
/// of the third iterate that would use it equals `l` anyway.  The two
/// undefined third-iterate vertices are pinned by working backwards from the
/// concurrency pattern of the final sides, and the two final sides that the
/// ordinary joins cannot produce are given by closed-form join/meet chains.
/// The result equals the deformation limit and has two alternating triples
/// of concurrent sides around `i`.
pub fn t4_on_x35(a: &TwistedPolygon<Rational>) -> Result<TwistedPolygon<Rational>, DesingError> {
    let ty = a.singularity_type();
    let n = a.n();
    let residue = |x: i64| (x - 1).rem_euclid(n as i64) + 1;
    let mut center = None;
    for cand in 1..=n as i64 {
        let want: std::collections::BTreeSet<i64> =
            [residue(cand - 1), residue(cand + 1)].into_iter().collect();
        if want == ty {
            center = Some(cand);
            break;
        }
    }
    let Some(center) = center else {
        return Err(DesingError::WrongType(format!(
            "expected two collapsed labels two apart, found {ty:?}"
        )));
    };
    let t0 = center.rem_euclid(n as i64) as usize;
    let g0 = 2 * t0 as i64;
    let mono = a.monodromy().clone();

    // Sides of the first iterate.
    let mut b: Vec<ProjLine<Rational>> = Vec::with_capacity(n);
    for t in 0..n {
        let e = 2 * t as i64;
        b.push(join(&a.vertex(e - 2), &a.vertex(e + 2))?);
    }
    let b_at = |d: i64| line_at(&b, &mono, 0, d);
    let l = b_at(g0);
    if b_at(g0 - 4) != l || b_at(g0 + 4) != l {
        return Err(unexpected(g0, "the three central diagonals do not merge"));
    }

    // Vertices of the first iterate; two pinch points on the common line.
    let mut bv: Vec<ProjPoint<Rational>> = Vec::with_capacity(n);
    for t in 0..n {
        let f = 2 * t as i64 + 1;
        bv.push(meet(&b_at(f - 1), &b_at(f + 1))?);
    }
    let bv_at = |d: i64| point_at(&bv, &mono, 1, d);
    let p = bv_at(g0 - 3);
    let q = bv_at(g0 + 3);
    if bv_at(g0 - 1) != p || p != meet(&l, &b_at(g0 - 2))? {
        return Err(unexpected(g0 - 2, "the first pinch point is not where it should be"));
    }
    if bv_at(g0 + 1) != q || q != meet(&l, &b_at(g0 + 2))? {
        return Err(unexpected(g0 + 2, "the second pinch point is not where it should be"));
    }

    // Sides of the second iterate; the four central ones collapse onto `l`.
    let mut c: Vec<ProjLine<Rational>> = Vec::with_capacity(n);
    for t in 0..n {
        let h = 2 * t as i64 + 1;
        c.push(join(&bv_at(h - 2), &bv_at(h + 2))?);
    }
    let c_at = |d: i64| line_at(&c, &mono, 1, d);
    for off in [-3, -1, 1, 3] {
        if c_at(g0 + off) != l {
            return Err(unexpected(g0 + off, "a central second-iterate side misses the line"));
        }
    }

    // Vertices of the second iterate.  The two flanking unknowns are
    // six-point conjugates; the central one is not well defined and is
    // never consulted.
    let mut cv: Vec<Option<ProjPoint<Rational>>> = Vec::with_capacity(n);
    for t in 0..n {
        let g = 2 * t as i64;
        let wrapped = (t + n - t0) % n;
        if wrapped <= 1 || wrapped == n - 1 {
            cv.push(None);
        } else {
            cv.push(Some(meet(&c_at(g - 1), &c_at(g + 1))?));
        }
    }
    for g_abs in [g0 - 2, g0 + 2] {
        let conj = triple_conjugate(&[
            bv_at(g_abs - 3),
            bv_at(g_abs - 1),
            a.vertex(g_abs),
            bv_at(g_abs + 3),
            bv_at(g_abs + 1),
        ])?;
        store_point(&mut cv, &mono, 0, g_abs, conj);
    }
    let cv_at = |d: i64| -> Result<ProjPoint<Rational>, DesingError> {
        opt_point_at(&cv, &mono, 0, d)
            .ok_or_else(|| unexpected(d, "the undefined central vertex was consulted"))
    };
    let r_point = cv_at(g0 - 2)?;
    let s_point = cv_at(g0 + 2)?;
    if !incident(&r_point, &l) || !incident(&s_point, &l) {
        return Err(unexpected(g0, "a conjugate vertex left the common line"));
    }
    if cv_at(g0 - 4)? != p || cv_at(g0 + 4)? != q {
        return Err(unexpected(g0, "the outer second-iterate vertices miss the pinch points"));
    }

    // Sides of the third iterate: the three central ones equal `l` because
    // all the second-iterate vertices they join lie on `l`.
    let mut d_lines: Vec<ProjLine<Rational>> = Vec::with_capacity(n);
    for t in 0..n {
        let e = 2 * t as i64;
        let wrapped = (t + n - t0) % n;
        if wrapped == 0 || wrapped == 1 || wrapped == n - 1 {
            d_lines.push(l.clone()); // placeholder, overwritten below
        } else {
            d_lines.push(join(&cv_at(e - 2)?, &cv_at(e + 2)?)?);
        }
    }
    for e_abs in [g0 - 2, g0, g0 + 2] {
        store_line(&mut d_lines, &mono, 0, e_abs, l.clone());
    }
    let d_at = |d: i64| line_at(&d_lines, &mono, 0, d);

    // Vertices of the third iterate.  The two central ones are pinned by
    // the concurrency pattern of the final sides: each equals its second
    // neighbour across the collapse.
    let mut dv: Vec<Option<ProjPoint<Rational>>> = Vec::with_capacity(n);
    for t in 0..n {
        let f = 2 * t as i64 + 1;
        let wrapped = (t + n - t0) % n;
        if wrapped == 0 || wrapped == n - 1 {
            dv.push(None);
        } else {
            dv.push(Some(meet(&d_at(f - 1), &d_at(f + 1))?));
        }
    }
    let fetch = |dv: &[Option<ProjPoint<Rational>>], d: i64| {
        opt_point_at(dv, &mono, 1, d)
            .ok_or_else(|| unexpected(d, "an undefined third-iterate vertex was consulted"))
    };
    let r_again = fetch(&dv, g0 - 3)?;
    let s_again = fetch(&dv, g0 + 3)?;
    if r_again != r_point || s_again != s_point {
        return Err(unexpected(g0, "the backward-filled vertices miss the conjugate points"));
    }
    store_point(&mut dv, &mono, 1, g0 + 1, r_again);
    store_point(&mut dv, &mono, 1, g0 - 1, s_again);
    let dv_at = |d: i64| fetch(&dv, d);

    // Sides of the fourth iterate.  The two that ordinary joins cannot give
    // are produced by closed-form join/meet chains through the collapse data.
    let mut e_lines: Vec<ProjLine<Rational>> = Vec::with_capacity(n);
    for t in 0..n {
        let h = 2 * t as i64 + 1;
        let wrapped = (t + n - t0) % n;
        if wrapped == 0 || wrapped == n - 1 {
            e_lines.push(l.clone()); // placeholder, overwritten below
        } else {
            e_lines.push(join(&dv_at(h - 2)?, &dv_at(h + 2)?)?);
        }
    }
    {
        // Doubled index g0 - 1.
        let step1 = meet(&b_at(g0 + 2), &d_at(g0 - 4))?;
        let step2 = join(&step1, &s_point)?;
        let step3 = meet(&step2, &c_at(g0 + 5))?;
        store_line(&mut e_lines, &mono, 1, g0 - 1, join(&step3, &r_point)?);
        // Doubled index g0 + 1.
        let step1 = meet(&b_at(g0 - 2), &d_at(g0 + 4))?;
        let step2 = join(&step1, &r_point)?;
        let step3 = meet(&step2, &c_at(g0 - 5))?;
        store_line(&mut e_lines, &mono, 1, g0 + 1, join(&step3, &s_point)?);
    }
    let e_at = |d: i64| line_at(&e_lines, &mono, 1, d);
    if !concurrent(&e_at(g0 - 5), &e_at(g0 - 1), &e_at(g0 + 3))
        || !concurrent(&e_at(g0 - 3), &e_at(g0 + 1), &e_at(g0 + 5))
    {
        return Err(unexpected(g0, "the image does not land in the dual collapse variety"));
    }

    // Vertices of the fourth iterate.
    let mut ev: Vec<ProjPoint<Rational>> = Vec::with_capacity(n);
    for t in 0..n {
        let g = 2 * t as i64;
        ev.push(meet(&e_at(g - 1), &e_at(g + 1))?);
    }
    Ok(polygon_allowing_degenerate(Indexing::Integer, ev, mono)?)
}

/// Doubled indices of the slots of one iterate that were filled at random.
#[derive(Clone, Debug, Serialize)]
pub struct RandomRecord {
    /// Which iterate (1 = first pentagram step).
    pub step: usize,
    /// Doubled indices of randomly decorated vertices.
    pub vertex_slots: Vec<i64>,
    /// Doubled indices of randomly decorated sides.
    pub side_slots: Vec<i64>,
}

/// Result of the general desingularization algorithm: the final polygon,
/// every decorated iterate, and a log of the randomly filled slots.
#[derive(Clone, Debug)]
pub struct MainOutcome {
    pub polygon: TwistedPolygon<Rational>,
    pub iterates: Vec<DecoratedPolygon<Rational>>,
    pub random_log: Vec<RandomRecord>,
}

/// The general desingularization algorithm.
///
/// Decorates the input with the limit decoration of a random deformation,
/// applies one decorated pentagram step, then repeatedly applies the
/// two-step lift to the last two iterates; the result is the underlying
/// polygon of the `m`-th iterate.  For a polygon that is singular for the
/// first powers of the map but regular for the `m`-th, the output is the
/// desingularized `m`-th image and does not depend on `seed`; decorations
/// that had to be chosen at random along the way are reported in the log.
pub fn main(
    a: &TwistedPolygon<Rational>,
    m: usize,
    seed: u64,
) -> Result<MainOutcome, DesingError> {
    let src = RandomSource::new(seed);
    let mut iterates: Vec<DecoratedPolygon<Rational>> = Vec::with_capacity(m + 1);
    iterates.push(decorate_randomly(a, src.child(0).seed())?.normalized());
    if m >= 1 {
        iterates.push(t_tilde(&iterates[0])?.normalized());
    }
    for k in 2..=m {
        let next = t_tilde2(&iterates[k - 2], &iterates[k - 1], &src.child(k as u64))?;
        iterates.push(next.normalized());
    }
    let mut random_log = Vec::new();
    for (step, it) in iterates.iter().enumerate() {
        let vertex_slots = it.random_vertex_slots();
        let side_slots = it.random_side_slots();
        if !vertex_slots.is_empty() || !side_slots.is_empty() {
            random_log.push(RandomRecord {
                step,
                vertex_slots,
                side_slots,
            });
        }
    }
    Ok(MainOutcome {
        polygon: iterates[m].polygon().clone(),
        iterates,
        random_log,
    })
}
