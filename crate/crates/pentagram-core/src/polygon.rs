//! Twisted polygons and the pentagram map.
//!
//! A twisted polygon is a bi-infinite sequence of plane points `A_i` with
//! `A_{i+n} = phi(A_i)` for a fixed projective transformation `phi` (the
//! monodromy).  Polygons are indexed either by the integers or by the
//! half-integers; the pentagram map sends one scheme to the other.  All
//! indices are handled internally in doubled form: the vertex `A_i` lives at
//! doubled index `2i`, so integer-indexed vertices sit at even doubled
//! indices and half-integer-indexed ones at odd doubled indices, and sides
//! always sit at the opposite parity.
//!
//! The module also provides the projective coordinates of the map: the
//! x-coordinates and y-parameters of a polygon (each computed by two
//! independent routes), the coordinate form `alpha1`/`alpha2` of the
//! pentagram map, membership predicates for the singularity loci, and
//! seeded generators of generic polygons and of polygons with a prescribed
//! singularity type.

use crate::projective::{
    apply_to_point, chi, chi_lines, incident, join, mat_adjugate, mat_det, mat_identity, mat_mul,
    mat_proportional, mat_transpose, mat_vec, meet, t_cross, t_det3, GeomError, Mat3, ProjLine,
    ProjPoint, RandomSource, MAX_RANDOM_RETRIES,
};
use crate::scalar::Field;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

/// Which arithmetic the vertex indices of a polygon live in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Indexing {
    Integer,
    HalfInteger,
}

impl Indexing {
    /// Parity of the doubled indices at which vertices sit.
    pub fn vertex_parity(self) -> i64 {
        match self {
            Indexing::Integer => 0,
            Indexing::HalfInteger => 1,
        }
    }

    /// Parity of the doubled indices at which sides sit.
    pub fn side_parity(self) -> i64 {
        1 - self.vertex_parity()
    }

    pub fn opposite(self) -> Indexing {
        match self {
            Indexing::Integer => Indexing::HalfInteger,
            Indexing::HalfInteger => Indexing::Integer,
        }
    }
}

/// Renders a doubled index in conventional notation: `4 -> "2"`, `3 -> "3/2"`.
pub fn format_index(d: i64) -> String {
    if d % 2 == 0 {
        (d / 2).to_string()
    } else {
        format!("{d}/2")
    }
}

/// Errors from polygon construction and coordinate computations.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PolygonError {
    #[error("a twisted polygon needs at least 5 vertices, got {0}")]
    TooFewVertices(usize),
    #[error("monodromy matrix is singular")]
    SingularMonodromy,
    #[error("vertices {0} are collinear within a consecutive quadruple")]
    GeneralPosition(String),
    #[error("degenerate join/meet at index {0}")]
    SingularAt(String),
    #[error("x[{j}] undefined: {source}")]
    CoordinateUndefined { j: i64, source: GeomError },
    #[error("y[{j}] undefined")]
    ParameterUndefined { j: i64 },
    #[error("coordinate singularity at x[{0}]")]
    CoordinateSingularity(i64),
    #[error("invalid singularity type: {0}")]
    InvalidType(String),
    #[error("could not generate polygon: {0}")]
    GenerationFailed(String),
    #[error(transparent)]
    Geom(#[from] GeomError),
}

/// A twisted polygon: `n` base vertices, an indexing scheme, and an
/// invertible monodromy applied on every wrap around the base window.
/// Immutable after construction.
#[derive(Clone, Debug)]
pub struct TwistedPolygon<F: Field> {
    n: usize,
    indexing: Indexing,
    base: Vec<ProjPoint<F>>,
    monodromy: Mat3<F>,
    monodromy_adj: Mat3<F>,
    degenerate: bool,
}

impl<F: Field> TwistedPolygon<F> {
    /// Builds a polygon from its base vertices.  Unless `degenerate` is set,
    /// every quadruple of consecutive vertices must be in general position.
    pub fn new(
        indexing: Indexing,
        base: Vec<ProjPoint<F>>,
        monodromy: Mat3<F>,
        degenerate: bool,
    ) -> Result<Self, PolygonError> {
        if base.len() < 5 {
            return Err(PolygonError::TooFewVertices(base.len()));
        }
        if mat_det(&monodromy).is_zero() {
            return Err(PolygonError::SingularMonodromy);
        }
        let monodromy_adj = mat_adjugate(&monodromy);
        let poly = TwistedPolygon {
            n: base.len(),
            indexing,
            base,
            monodromy,
            monodromy_adj,
            degenerate,
        };
        if !degenerate {
            poly.check_general_position()?;
        }
        Ok(poly)
    }

    /// Closed polygon: identity monodromy.
    pub fn closed(indexing: Indexing, base: Vec<ProjPoint<F>>) -> Result<Self, PolygonError> {
        TwistedPolygon::new(indexing, base, mat_identity(), false)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn indexing(&self) -> Indexing {
        self.indexing
    }

    pub fn monodromy(&self) -> &Mat3<F> {
        &self.monodromy
    }

    pub fn base_vertices(&self) -> &[ProjPoint<F>] {
        &self.base
    }

    pub fn is_degenerate(&self) -> bool {
        self.degenerate
    }

    /// Returns a copy with the degeneracy flag replaced (re-validating
    /// general position when clearing it).
    pub fn with_degenerate(&self, degenerate: bool) -> Result<Self, PolygonError> {
        TwistedPolygon::new(
            self.indexing,
            self.base.clone(),
            self.monodromy.clone(),
            degenerate,
        )
    }

    fn monodromy_power(&self, q: i64) -> Mat3<F> {
        let factor = if q >= 0 {
            &self.monodromy
        } else {
            &self.monodromy_adj
        };
        let mut out = mat_identity();
        for _ in 0..q.unsigned_abs() {
            out = mat_mul(&out, factor);
        }
        out
    }

    /// Vertex at a doubled index of the vertex parity; unbounded indices are
    /// resolved through monodromy powers.
    pub fn vertex(&self, d: i64) -> ProjPoint<F> {
        assert_eq!(
            d.rem_euclid(2),
            self.indexing.vertex_parity(),
            "doubled index {d} does not have vertex parity"
        );
        let t = d.div_euclid(2);
        let pos = t.rem_euclid(self.n as i64) as usize;
        let q = t.div_euclid(self.n as i64);
        if q == 0 {
            return self.base[pos].clone();
        }
        apply_to_point(&self.monodromy_power(q), &self.base[pos])
            .expect("monodromy powers are invertible")
    }

    /// Side at a doubled index of the side parity: the join of the two
    /// adjacent vertices.
    pub fn side(&self, d: i64) -> Result<ProjLine<F>, PolygonError> {
        assert_eq!(
            d.rem_euclid(2),
            self.indexing.side_parity(),
            "doubled index {d} does not have side parity"
        );
        join(&self.vertex(d - 1), &self.vertex(d + 1))
            .map_err(|_| PolygonError::SingularAt(format_index(d)))
    }

    /// Side as a raw coordinate triple (zero when the adjacent vertices
    /// coincide); used by the total membership predicates.
    fn side_triple(&self, d: i64) -> [F; 3] {
        t_cross(self.vertex(d - 1).coords(), self.vertex(d + 1).coords())
    }

    /// Checks that every quadruple of consecutive vertices is in general
    /// position (no three of the four collinear).
    pub fn check_general_position(&self) -> Result<(), PolygonError> {
        let vp = self.indexing.vertex_parity();
        for t in 0..self.n as i64 {
            let d = 2 * t + vp;
            let quad = [
                self.vertex(d),
                self.vertex(d + 2),
                self.vertex(d + 4),
                self.vertex(d + 6),
            ];
            let idx = [d, d + 2, d + 4, d + 6];
            for skip in 0..4 {
                let kept: Vec<usize> = (0..4).filter(|&k| k != skip).collect();
                let det = t_det3(
                    quad[kept[0]].coords(),
                    quad[kept[1]].coords(),
                    quad[kept[2]].coords(),
                );
                if det.is_zero() {
                    let names: Vec<String> =
                        kept.iter().map(|&k| format_index(idx[k])).collect();
                    return Err(PolygonError::GeneralPosition(names.join(", ")));
                }
            }
        }
        Ok(())
    }

    /// Applies a projective transformation to the whole polygon; the
    /// monodromy is conjugated accordingly.
    pub fn apply_map(&self, m: &Mat3<F>) -> Result<TwistedPolygon<F>, PolygonError> {
        if mat_det(m).is_zero() {
            return Err(PolygonError::SingularMonodromy);
        }
        let base = self
            .base
            .iter()
            .map(|p| apply_to_point(m, p))
            .collect::<Result<Vec<_>, _>>()?;
        let monodromy = mat_mul(&mat_mul(m, &self.monodromy), &mat_adjugate(m));
        let monodromy_adj = mat_adjugate(&monodromy);
        Ok(TwistedPolygon {
            n: self.n,
            indexing: self.indexing,
            base,
            monodromy,
            monodromy_adj,
            degenerate: self.degenerate,
        })
    }

    /// Structural equality: same scheme, equal vertices as projective
    /// points, and monodromies equal up to scale.
    pub fn same_polygon(&self, other: &TwistedPolygon<F>) -> bool {
        self.n == other.n
            && self.indexing == other.indexing
            && self.base.iter().zip(&other.base).all(|(p, q)| p == q)
            && mat_proportional(&self.monodromy, &other.monodromy)
    }

    /// One step of the pentagram map: the output vertex at doubled index `d`
    /// (of the opposite parity) is the meet of the two short diagonals
    /// `join(A(d-3), A(d+1))` and `join(A(d-1), A(d+3))`.  The output keeps
    /// the monodromy and is flagged degenerate when it violates general
    /// position.
    pub fn pentagram(&self) -> Result<TwistedPolygon<F>, PolygonError> {
        let out_scheme = self.indexing.opposite();
        let vp = out_scheme.vertex_parity();
        let mut base = Vec::with_capacity(self.n);
        for t in 0..self.n as i64 {
            let d = 2 * t + vp;
            let fail = || PolygonError::SingularAt(format_index(d));
            let l1 = join(&self.vertex(d - 3), &self.vertex(d + 1)).map_err(|_| fail())?;
            let l2 = join(&self.vertex(d - 1), &self.vertex(d + 3)).map_err(|_| fail())?;
            base.push(meet(&l1, &l2).map_err(|_| fail())?);
        }
        let mut out = TwistedPolygon {
            n: self.n,
            indexing: out_scheme,
            base,
            monodromy: self.monodromy.clone(),
            monodromy_adj: self.monodromy_adj.clone(),
            degenerate: true,
        };
        if out.check_general_position().is_ok() {
            out.degenerate = false;
        }
        Ok(out)
    }

    /// The x-coordinates, computed from cross ratios of the vertex chain.
    pub fn x_coords(&self) -> Result<XCoords<F>, PolygonError> {
        let vp = self.indexing.vertex_parity();
        let two_n = 2 * self.n as i64;
        let mut values = Vec::with_capacity(2 * self.n);
        for j in 0..two_n {
            let x = if j.rem_euclid(2) == vp {
                self.x_at_vertex_parity(j)
            } else {
                self.x_at_side_parity(j)
            };
            values.push(x.map_err(|source| PolygonError::CoordinateUndefined { j, source })?);
        }
        Ok(XCoords {
            scheme: self.indexing,
            values,
        })
    }

    /// `x_{2k} = chi(A_{k-2}, A_{k-1}, B, D)` at doubled index `j = 2k`.
    fn x_at_vertex_parity(&self, j: i64) -> Result<F, GeomError> {
        let v = |d: i64| self.vertex(j + d);
        let back = join(&v(-4), &v(-2))?;
        let mid = join(&v(0), &v(2))?;
        let fwd = join(&v(2), &v(4))?;
        let b = meet(&back, &mid)?;
        let d = meet(&back, &fwd)?;
        chi(&v(-4), &v(-2), &b, &d)
    }

    /// `x_{2k+1} = chi(A_{k+2}, A_{k+1}, C, D)` at doubled index `j = 2k+1`.
    fn x_at_side_parity(&self, j: i64) -> Result<F, GeomError> {
        let v = |d: i64| self.vertex(j + d);
        let back = join(&v(-5), &v(-3))?;
        let mid = join(&v(-3), &v(-1))?;
        let fwd = join(&v(1), &v(3))?;
        let c = meet(&mid, &fwd)?;
        let d = meet(&back, &fwd)?;
        chi(&v(3), &v(1), &c, &d)
    }

    /// The y-parameters, from products of consecutive x-coordinates:
    /// `y_j = -(x_j x_{j+1})^{-1}` at vertex parity and `y_j = -x_j x_{j+1}`
    /// at side parity.
    pub fn y_params(&self) -> Result<YParams<F>, PolygonError> {
        let x = self.x_coords()?;
        let vp = self.indexing.vertex_parity();
        let two_n = 2 * self.n as i64;
        let mut values = Vec::with_capacity(2 * self.n);
        for j in 0..two_n {
            let prod = x.get(j).clone() * x.get(j + 1).clone();
            let y = if j.rem_euclid(2) == vp {
                (-prod)
                    .checked_inv()
                    .map_err(|_| PolygonError::ParameterUndefined { j })?
            } else {
                -prod
            };
            values.push(y);
        }
        Ok(YParams {
            scheme: self.indexing,
            values,
        })
    }

    /// The y-parameters computed directly from cross ratios, independent of
    /// the x-coordinates; agrees with [`Self::y_params`].
    pub fn y_params_geometric(&self) -> Result<YParams<F>, PolygonError> {
        let vp = self.indexing.vertex_parity();
        let two_n = 2 * self.n as i64;
        let mut values = Vec::with_capacity(2 * self.n);
        for j in 0..two_n {
            let y = if j.rem_euclid(2) == vp {
                self.y_vertex_route(j)
            } else {
                self.y_side_route(j)
            };
            values.push(y.map_err(|_| PolygonError::ParameterUndefined { j })?);
        }
        Ok(YParams {
            scheme: self.indexing,
            values,
        })
    }

    /// `y_{2k} = -chi(A_kA_{k-2}, A_kA_{k-1}, A_kA_{k+1}, A_kA_{k+2})^{-1}`.
    fn y_vertex_route(&self, j: i64) -> Result<F, GeomError> {
        let v = |d: i64| self.vertex(j + d);
        let center = v(0);
        let l1 = join(&center, &v(-4))?;
        let l2 = join(&center, &v(-2))?;
        let l3 = join(&center, &v(2))?;
        let l4 = join(&center, &v(4))?;
        let val = chi_lines(&l1, &l2, &l3, &l4)?;
        Ok(-(val.checked_inv()?))
    }

    /// `y_{2k+1} = -chi(B, A_k, A_{k+1}, E)` with `B` and `E` the meets of
    /// the side through `A_k, A_{k+1}` with its second neighbors.
    fn y_side_route(&self, j: i64) -> Result<F, GeomError> {
        let v = |d: i64| self.vertex(j + d);
        let back = join(&v(-5), &v(-3))?;
        let mid = join(&v(-1), &v(1))?;
        let fwd = join(&v(3), &v(5))?;
        let b = meet(&back, &mid)?;
        let e = meet(&mid, &fwd)?;
        Ok(-(chi(&b, &v(-1), &v(1), &e)?))
    }

    /// Membership in the vertex singularity locus at vertex label `d/2`:
    /// the vertices two before and two after are collinear with it.
    pub fn in_x(&self, d: i64) -> bool {
        assert_eq!(
            d.rem_euclid(2),
            self.indexing.vertex_parity(),
            "doubled index {d} does not have vertex parity"
        );
        t_det3(
            self.vertex(d - 4).coords(),
            self.vertex(d).coords(),
            self.vertex(d + 4).coords(),
        )
        .is_zero()
    }

    /// Membership in the side singularity locus at side label `d/2`: the
    /// sides two before and two after are concurrent with it.  Total even on
    /// degenerate polygons (a collapsed side counts as concurrent).
    pub fn in_y(&self, d: i64) -> bool {
        assert_eq!(
            d.rem_euclid(2),
            self.indexing.side_parity(),
            "doubled index {d} does not have side parity"
        );
        t_det3(
            &self.side_triple(d - 4),
            &self.side_triple(d),
            &self.side_triple(d + 4),
        )
        .is_zero()
    }

    /// The set of vertex labels `i` in `1..=n` (integer-indexed polygons)
    /// whose singularity locus contains this polygon.
    pub fn singularity_type(&self) -> BTreeSet<i64> {
        assert_eq!(
            self.indexing,
            Indexing::Integer,
            "singularity types use integer vertex labels"
        );
        (1..=self.n as i64).filter(|&i| self.in_x(2 * i)).collect()
    }
}

// ---------------------------------------------------------------------------
// Coordinates.
// ---------------------------------------------------------------------------

/// Cyclic vector of x-coordinates `x_1..x_{2n}` (stored at doubled indices
/// `0..2n-1`, with `x_{j+2n} = x_j`), tagged with the indexing scheme of the
/// polygon it came from.
#[derive(Clone, Debug, PartialEq)]
pub struct XCoords<F: Field> {
    scheme: Indexing,
    values: Vec<F>,
}

impl<F: Field> XCoords<F> {
    pub fn new(scheme: Indexing, values: Vec<F>) -> Self {
        assert!(values.len() >= 10 && values.len() % 2 == 0);
        XCoords { scheme, values }
    }

    pub fn scheme(&self) -> Indexing {
        self.scheme
    }

    pub fn two_n(&self) -> usize {
        self.values.len()
    }

    pub fn n(&self) -> usize {
        self.values.len() / 2
    }

    pub fn get(&self, j: i64) -> &F {
        &self.values[j.rem_euclid(self.values.len() as i64) as usize]
    }

    pub fn values(&self) -> &[F] {
        &self.values
    }
}

/// Cyclic vector of y-parameters `y_1..y_{2n}`; satisfies
/// `y_1 y_2 ... y_{2n} = 1` when derived from a polygon.
#[derive(Clone, Debug, PartialEq)]
pub struct YParams<F: Field> {
    scheme: Indexing,
    values: Vec<F>,
}

impl<F: Field> YParams<F> {
    pub fn new(scheme: Indexing, values: Vec<F>) -> Self {
        assert!(values.len() >= 10 && values.len() % 2 == 0);
        YParams { scheme, values }
    }

    pub fn scheme(&self) -> Indexing {
        self.scheme
    }

    pub fn two_n(&self) -> usize {
        self.values.len()
    }

    pub fn n(&self) -> usize {
        self.values.len() / 2
    }

    pub fn get(&self, j: i64) -> &F {
        &self.values[j.rem_euclid(self.values.len() as i64) as usize]
    }

    pub fn values(&self) -> &[F] {
        &self.values
    }

    pub fn product(&self) -> F {
        self.values
            .iter()
            .fold(F::one(), |acc, v| acc * v.clone())
    }
}

/// Coordinate form of the pentagram map on half-integer-indexed polygons.
pub fn alpha1<F: Field>(x: &XCoords<F>) -> Result<XCoords<F>, PolygonError> {
    assert_eq!(
        x.scheme(),
        Indexing::HalfInteger,
        "alpha1 acts on half-integer-indexed coordinates"
    );
    alpha_impl(x, true)
}

/// Coordinate form of the pentagram map on integer-indexed polygons.
pub fn alpha2<F: Field>(x: &XCoords<F>) -> Result<XCoords<F>, PolygonError> {
    assert_eq!(
        x.scheme(),
        Indexing::Integer,
        "alpha2 acts on integer-indexed coordinates"
    );
    alpha_impl(x, false)
}

fn alpha_impl<F: Field>(x: &XCoords<F>, is_alpha1: bool) -> Result<XCoords<F>, PolygonError> {
    let two_n = x.two_n() as i64;
    let mut out = Vec::with_capacity(x.two_n());
    for j in 0..two_n {
        let even = j % 2 == 0;
        // Backward form: x_{j-1} (1 - x_{j-3} x_{j-2}) / (1 - x_{j+1} x_{j+2});
        // forward form:  x_{j+1} (1 - x_{j+3} x_{j+2}) / (1 - x_{j-1} x_{j-2}).
        let backward = if is_alpha1 { even } else { !even };
        let v = if backward {
            let den = F::one() - x.get(j + 1).clone() * x.get(j + 2).clone();
            if den.is_zero() {
                return Err(PolygonError::CoordinateSingularity(j));
            }
            x.get(j - 1).clone() * (F::one() - x.get(j - 3).clone() * x.get(j - 2).clone()) / den
        } else {
            let den = F::one() - x.get(j - 1).clone() * x.get(j - 2).clone();
            if den.is_zero() {
                return Err(PolygonError::CoordinateSingularity(j));
            }
            x.get(j + 1).clone() * (F::one() - x.get(j + 3).clone() * x.get(j + 2).clone()) / den
        };
        out.push(v);
    }
    Ok(XCoords {
        scheme: x.scheme().opposite(),
        values: out,
    })
}

// ---------------------------------------------------------------------------
// Generators.
// ---------------------------------------------------------------------------

fn random_polygon_impl<F: Field>(
    n: usize,
    indexing: Indexing,
    closed: bool,
    src: &mut RandomSource,
) -> Result<TwistedPolygon<F>, PolygonError> {
    if n < 5 {
        return Err(PolygonError::TooFewVertices(n));
    }
    for _ in 0..MAX_RANDOM_RETRIES {
        let base: Vec<ProjPoint<F>> = (0..n).map(|_| src.point()).collect();
        let monodromy: Mat3<F> = if closed { mat_identity() } else { src.matrix() };
        let Ok(poly) = TwistedPolygon::new(indexing, base, monodromy, false) else {
            continue;
        };
        let vp = indexing.vertex_parity();
        if (0..n as i64).any(|t| poly.in_x(2 * t + vp)) {
            continue;
        }
        if poly.x_coords().is_err() || poly.y_params().is_err() {
            continue;
        }
        return Ok(poly);
    }
    Err(PolygonError::GenerationFailed(
        "no generic polygon found within the retry budget".into(),
    ))
}

/// Seeded generic twisted polygon: general position, no vertex-locus
/// membership, and all coordinates defined.
pub fn random_polygon<F: Field>(
    n: usize,
    indexing: Indexing,
    src: &mut RandomSource,
) -> Result<TwistedPolygon<F>, PolygonError> {
    random_polygon_impl(n, indexing, false, src)
}

/// Seeded generic closed polygon (identity monodromy).
pub fn random_closed_polygon<F: Field>(
    n: usize,
    indexing: Indexing,
    src: &mut RandomSource,
) -> Result<TwistedPolygon<F>, PolygonError> {
    random_polygon_impl(n, indexing, true, src)
}

fn uf_find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

/// Seeded generic integer-indexed polygon with singularity type exactly `S`.
///
/// `labels` holds integer representatives of the vertex labels in `S`; each
/// `i` forces `A_{i-2}, A_i, A_{i+2}` onto a common line.  Constraint
/// triples sharing two labels are merged onto one line (so consecutive
/// step-2 labels yield longer collinear runs), labels outside the base
/// window constrain the base vertex through the monodromy, and a base vertex
/// on two constraint lines is pinned to their intersection.  The output is
/// resampled until its singularity type is exactly `S` (as residues) and
/// every consecutive quadruple is in general position.
pub fn random_polygon_in_xs<F: Field>(
    n: usize,
    labels: &BTreeSet<i64>,
    src: &mut RandomSource,
) -> Result<TwistedPolygon<F>, PolygonError> {
    if n < 5 {
        return Err(PolygonError::TooFewVertices(n));
    }
    if labels.is_empty() {
        return Err(PolygonError::InvalidType("empty singularity type".into()));
    }
    let n_i = n as i64;
    let residues: BTreeSet<i64> = labels.iter().map(|&i| (i - 1).rem_euclid(n_i) + 1).collect();
    if residues.len() == n {
        return Err(PolygonError::InvalidType(
            "type containing every index forces total degeneration".into(),
        ));
    }
    let triples: Vec<[i64; 3]> = labels.iter().map(|&i| [i - 2, i, i + 2]).collect();
    // Merge triples sharing at least two labels onto a common line.
    let mut parent: Vec<usize> = (0..triples.len()).collect();
    for a in 0..triples.len() {
        for b in (a + 1)..triples.len() {
            let shared = triples[a]
                .iter()
                .filter(|x| triples[b].contains(x))
                .count();
            if shared >= 2 {
                let (ra, rb) = (uf_find(&mut parent, a), uf_find(&mut parent, b));
                parent[ra] = rb;
            }
        }
    }
    let mut groups: Vec<Vec<i64>> = vec![vec![]; triples.len()];
    for (t, triple) in triples.iter().enumerate() {
        let root = uf_find(&mut parent, t);
        for &label in triple {
            if !groups[root].contains(&label) {
                groups[root].push(label);
            }
        }
    }
    let groups: Vec<Vec<i64>> = groups.into_iter().filter(|g| !g.is_empty()).collect();
    'attempt: for _ in 0..MAX_RANDOM_RETRIES {
        let monodromy: Mat3<F> = src.matrix();
        // Positive and negative monodromy powers for pulling constraint
        // lines back to the base window.
        let adj = mat_adjugate(&monodromy);
        let power = |q: i64| -> Mat3<F> {
            let factor = if q >= 0 { &monodromy } else { &adj };
            let mut m = mat_identity();
            for _ in 0..q.unsigned_abs() {
                m = mat_mul(&m, factor);
            }
            m
        };
        // Gather the constraint lines per base position.
        let mut constraints: Vec<Vec<ProjLine<F>>> = vec![vec![]; n];
        for group in &groups {
            let line: ProjLine<F> = src.line();
            for &label in group {
                let pos = label.rem_euclid(n_i) as usize;
                let q = label.div_euclid(n_i);
                // A_label = phi^q (base[pos]) on `line` means base[pos] lies
                // on the pullback of `line` by phi^q.
                let coords = mat_vec(&mat_transpose(&power(q)), line.coords());
                let Ok(pulled) = ProjLine::new(coords) else {
                    continue 'attempt;
                };
                if !constraints[pos].iter().any(|l| *l == pulled) {
                    constraints[pos].push(pulled);
                }
            }
        }
        // Sample the base vertices subject to their constraints.
        let mut base: Vec<ProjPoint<F>> = Vec::with_capacity(n);
        for cs in &constraints {
            let v = match cs.len() {
                0 => src.point(),
                1 => match src.point_on(&cs[0]) {
                    Ok(v) => v,
                    Err(_) => continue 'attempt,
                },
                _ => {
                    let Ok(v) = meet(&cs[0], &cs[1]) else {
                        continue 'attempt;
                    };
                    if cs[2..].iter().any(|l| !incident(&v, l)) {
                        continue 'attempt;
                    }
                    v
                }
            };
            base.push(v);
        }
        let Ok(poly) = TwistedPolygon::new(Indexing::Integer, base, monodromy, true) else {
            continue 'attempt;
        };
        if poly.singularity_type() != residues {
            continue 'attempt;
        }
        // Forced collinearities never sit inside a consecutive quadruple, so
        // a generic member passes the general-position check and the
        // degeneracy flag can be cleared.
        let Ok(poly) = poly.with_degenerate(false) else {
            continue 'attempt;
        };
        return Ok(poly);
    }
    Err(PolygonError::GenerationFailed(format!(
        "no polygon of singularity type {labels:?} found within the retry budget"
    )))
}
