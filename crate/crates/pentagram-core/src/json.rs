//! JSON encodings of polygons and decorated polygons.
//!
//! Every coordinate is written as an exact rational string such as `"3/4"`
//! or `"-2"`, so a file parses back into the very polygon it came from.
//! Projective triples (vertices, sides, decorations) are canonicalized to
//! their primitive integer representatives before writing, which makes the
//! encoding deterministic: projectively equal slots always produce the same
//! bytes, and serializing, parsing, and serializing again reproduces the
//! file unchanged.  The monodromy matrix is written entry for entry without
//! rescaling because, unlike a projective triple, it is stored as a concrete
//! matrix.
//!
//! The JSON files are the single source of truth for command-line output;
//! any other rendering (such as SVG) is derived from them.

use crate::decorated::{DecoratedError, DecoratedPolygon, Provenance};
use crate::polygon::{Indexing, PolygonError, TwistedPolygon};
use crate::projective::{GeomError, Mat3, ProjLine, ProjPoint};
use crate::scalar::{format_rational, parse_rational, Rational, ScalarError};
use serde::{Deserialize, Serialize};

/// Errors from converting JSON data back into polygons.
#[derive(Debug, thiserror::Error)]
pub enum JsonError {
    #[error("malformed JSON: {0}")]
    Syntax(#[from] serde_json::Error),
    #[error("bad coordinate: {0}")]
    Scalar(#[from] ScalarError),
    #[error("bad coordinate triple: {0}")]
    Geom(#[from] GeomError),
    #[error(transparent)]
    Polygon(#[from] PolygonError),
    #[error(transparent)]
    Decorated(#[from] DecoratedError),
    #[error("{0}")]
    Invalid(String),
}

/// JSON form of a twisted polygon.
///
/// `vertices` holds the `n` base vertices as homogeneous coordinate triples;
/// further vertices follow by applying the monodromy.  `degenerate` records
/// whether consecutive vertices are allowed to collapse.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolygonJson {
    pub n: usize,
    pub indexing: Indexing,
    pub vertices: Vec<[String; 3]>,
    pub monodromy: [[String; 3]; 3],
    pub degenerate: bool,
}

/// JSON form of a decorated polygon: the polygon fields plus explicit
/// sides, the decoration of every vertex and side, and a provenance tag per
/// decoration slot saying whether the value was computed, drawn at random,
/// or taken from a deformation curve.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecoratedPolygonJson {
    pub n: usize,
    pub indexing: Indexing,
    pub vertices: Vec<[String; 3]>,
    pub monodromy: [[String; 3]; 3],
    pub degenerate: bool,
    pub sides: Vec<[String; 3]>,
    pub vertex_decorations: Vec<[String; 3]>,
    pub side_decorations: Vec<[String; 3]>,
    pub vertex_provenance: Vec<Provenance>,
    pub side_provenance: Vec<Provenance>,
}

fn point_strings(p: &ProjPoint<Rational>) -> [String; 3] {
    let t = p.primitive();
    std::array::from_fn(|k| t[k].to_string())
}

fn line_strings(l: &ProjLine<Rational>) -> [String; 3] {
    let t = l.primitive();
    std::array::from_fn(|k| t[k].to_string())
}

fn triple_values(s: &[String; 3]) -> Result<[Rational; 3], JsonError> {
    Ok([
        parse_rational(&s[0])?,
        parse_rational(&s[1])?,
        parse_rational(&s[2])?,
    ])
}

fn point_values(s: &[String; 3]) -> Result<ProjPoint<Rational>, JsonError> {
    Ok(ProjPoint::new(triple_values(s)?)?)
}

fn line_values(s: &[String; 3]) -> Result<ProjLine<Rational>, JsonError> {
    Ok(ProjLine::new(triple_values(s)?)?)
}

fn matrix_strings(m: &Mat3<Rational>) -> [[String; 3]; 3] {
    std::array::from_fn(|i| std::array::from_fn(|j| format_rational(&m[i][j])))
}

fn matrix_values(s: &[[String; 3]; 3]) -> Result<Mat3<Rational>, JsonError> {
    let rows = [
        triple_values(&s[0])?,
        triple_values(&s[1])?,
        triple_values(&s[2])?,
    ];
    Ok(rows)
}

/// Encodes a polygon.
pub fn polygon_to_json(p: &TwistedPolygon<Rational>) -> PolygonJson {
    PolygonJson {
        n: p.n(),
        indexing: p.indexing(),
        vertices: p.base_vertices().iter().map(point_strings).collect(),
        monodromy: matrix_strings(p.monodromy()),
        degenerate: p.is_degenerate(),
    }
}

/// Decodes a polygon, validating vertex count, monodromy invertibility,
/// and (unless the file says `degenerate`) general position.
pub fn polygon_from_json(j: &PolygonJson) -> Result<TwistedPolygon<Rational>, JsonError> {
    if j.n != j.vertices.len() {
        return Err(JsonError::Invalid(format!(
            "field n is {} but there are {} vertices",
            j.n,
            j.vertices.len()
        )));
    }
    let base = j
        .vertices
        .iter()
        .map(point_values)
        .collect::<Result<Vec<_>, _>>()?;
    let monodromy = matrix_values(&j.monodromy)?;
    Ok(TwistedPolygon::new(
        j.indexing,
        base,
        monodromy,
        j.degenerate,
    )?)
}

/// Encodes a decorated polygon, provenance tags included.
pub fn decorated_to_json(d: &DecoratedPolygon<Rational>) -> DecoratedPolygonJson {
    let p = d.polygon();
    DecoratedPolygonJson {
        n: p.n(),
        indexing: p.indexing(),
        vertices: p.base_vertices().iter().map(point_strings).collect(),
        monodromy: matrix_strings(p.monodromy()),
        degenerate: p.is_degenerate(),
        sides: d.base_sides().iter().map(line_strings).collect(),
        vertex_decorations: d
            .base_vertex_decorations()
            .iter()
            .map(line_strings)
            .collect(),
        side_decorations: d
            .base_side_decorations()
            .iter()
            .map(point_strings)
            .collect(),
        vertex_provenance: d.vertex_provenance().to_vec(),
        side_provenance: d.side_provenance().to_vec(),
    }
}

/// Decodes a decorated polygon, validating every incidence between the
/// polygon, its sides, and the decorations.
pub fn decorated_from_json(
    j: &DecoratedPolygonJson,
) -> Result<DecoratedPolygon<Rational>, JsonError> {
    let polygon = polygon_from_json(&PolygonJson {
        n: j.n,
        indexing: j.indexing,
        vertices: j.vertices.clone(),
        monodromy: j.monodromy.clone(),
        degenerate: j.degenerate,
    })?;
    let sides = j
        .sides
        .iter()
        .map(line_values)
        .collect::<Result<Vec<_>, _>>()?;
    let vertex_decorations = j
        .vertex_decorations
        .iter()
        .map(line_values)
        .collect::<Result<Vec<_>, _>>()?;
    let side_decorations = j
        .side_decorations
        .iter()
        .map(point_values)
        .collect::<Result<Vec<_>, _>>()?;
    Ok(DecoratedPolygon::new(
        polygon,
        sides,
        vertex_decorations,
        side_decorations,
        j.vertex_provenance.clone(),
        j.side_provenance.clone(),
    )?)
}

/// Serializes a schema value to pretty-printed JSON with a trailing
/// newline.  The output depends only on the value, never on run order.
pub fn to_json_string<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("schema types serialize infallibly");
    s.push('\n');
    s
}

/// Parses a schema value from a JSON string.
pub fn from_json_str<'a, T: Deserialize<'a>>(s: &'a str) -> Result<T, JsonError> {
    Ok(serde_json::from_str(s)?)
}
