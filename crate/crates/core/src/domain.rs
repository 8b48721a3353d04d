//! Core data model: scores, treatment geometry, datasets, and reports.
//!
//! Everything here is immutable after construction and safe to share across
//! threads; the operations are pure.

use crate::error::{Error, Result, Side};
use crate::numeric::normal_critical_value;
use crate::seeding::rng_from;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};
use std::path::Path;

/// A d-dimensional running-variable value, in raw score units.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ScorePoint {
    coords: Vec<f64>,
}

impl ScorePoint {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::Config("score point needs at least one coordinate".into()));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::Config("score coordinates must be finite".into()));
        }
        Ok(Self { coords })
    }

    /// Convenience constructor for a univariate score.
    pub fn scalar(x: f64) -> Result<Self> {
        Self::new(vec![x])
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    /// Euclidean distance to another point of the same dimension.
    pub fn distance(&self, other: &ScorePoint) -> Result<f64> {
        if self.dim() != other.dim() {
            return Err(Error::Dimension { expected: self.dim(), got: other.dim() });
        }
        Ok(self
            .coords
            .iter()
            .zip(&other.coords)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt())
    }
}

impl TryFrom<Vec<f64>> for ScorePoint {
    type Error = Error;
    fn try_from(coords: Vec<f64>) -> Result<Self> {
        ScorePoint::new(coords)
    }
}

impl From<ScorePoint> for Vec<f64> {
    fn from(p: ScorePoint) -> Vec<f64> {
        p.coords
    }
}

/// Which side of a boundary curve receives the treatment.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveSide {
    Below,
    Above,
}

/// Deterministic treatment assignment geometry A(x).
///
/// Classification is total over finite score points of matching dimension,
/// and the treated side is closed: a point exactly on the threshold, plane,
/// or curve is treated.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AssignmentRule {
    /// Univariate sharp design: treated iff x >= cutoff.
    UnivariateThreshold { cutoff: f64 },
    /// Treated iff normal . x >= offset.
    HalfPlane { normal: Vec<f64>, offset: f64 },
    /// Bivariate boundary given as a polyline that is a function graph over
    /// the first coordinate. Between vertices the curve is linear; outside
    /// the vertex range the nearest segment is extended.
    CurveBoundary {
        vertices: Vec<[f64; 2]>,
        treated_side: CurveSide,
    },
}

impl AssignmentRule {
    pub fn univariate_threshold(cutoff: f64) -> Result<Self> {
        let rule = AssignmentRule::UnivariateThreshold { cutoff };
        rule.validate()?;
        Ok(rule)
    }

    pub fn half_plane(normal: Vec<f64>, offset: f64) -> Result<Self> {
        let rule = AssignmentRule::HalfPlane { normal, offset };
        rule.validate()?;
        Ok(rule)
    }

    /// Vertices must be strictly monotone in the first coordinate; a strictly
    /// decreasing polyline is reversed so the stored order is increasing.
    pub fn curve_boundary(mut vertices: Vec<[f64; 2]>, treated_side: CurveSide) -> Result<Self> {
        if vertices.len() >= 2 && vertices.windows(2).all(|w| w[1][0] < w[0][0]) {
            vertices.reverse();
        }
        let rule = AssignmentRule::CurveBoundary { vertices, treated_side };
        rule.validate()?;
        Ok(rule)
    }

    /// Checks the structural invariants; deserialized rules should be passed
    /// through this before use.
    pub fn validate(&self) -> Result<()> {
        match self {
            AssignmentRule::UnivariateThreshold { cutoff } => {
                if !cutoff.is_finite() {
                    return Err(Error::Config("cutoff must be finite".into()));
                }
            }
            AssignmentRule::HalfPlane { normal, offset } => {
                if normal.is_empty() {
                    return Err(Error::Config("half-plane normal must be non-empty".into()));
                }
                if normal.iter().any(|v| !v.is_finite()) || !offset.is_finite() {
                    return Err(Error::Config("half-plane parameters must be finite".into()));
                }
                if normal.iter().all(|v| *v == 0.0) {
                    return Err(Error::Config("half-plane normal must be nonzero".into()));
                }
            }
            AssignmentRule::CurveBoundary { vertices, .. } => {
                if vertices.len() < 2 {
                    return Err(Error::Config("curve boundary needs at least two vertices".into()));
                }
                if vertices.iter().any(|v| !v[0].is_finite() || !v[1].is_finite()) {
                    return Err(Error::Config("curve vertices must be finite".into()));
                }
                if !vertices.windows(2).all(|w| w[0][0] < w[1][0]) {
                    return Err(Error::Config(
                        "curve vertices must be strictly monotone in the first coordinate".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Dimension of the scores this rule classifies.
    pub fn dim(&self) -> usize {
        match self {
            AssignmentRule::UnivariateThreshold { .. } => 1,
            AssignmentRule::HalfPlane { normal, .. } => normal.len(),
            AssignmentRule::CurveBoundary { .. } => 2,
        }
    }

    /// Height of the boundary curve at `x1`, extending the nearest segment
    /// linearly outside the vertex range.
    fn curve_height(vertices: &[[f64; 2]], x1: f64) -> f64 {
        let first = vertices[0];
        let last = vertices[vertices.len() - 1];
        let segment = if x1 <= first[0] {
            (vertices[0], vertices[1])
        } else if x1 >= last[0] {
            (vertices[vertices.len() - 2], last)
        } else {
            let hi = vertices.partition_point(|v| v[0] <= x1);
            (vertices[hi - 1], vertices[hi])
        };
        let (a, b) = segment;
        let t = (x1 - a[0]) / (b[0] - a[0]);
        a[1] + t * (b[1] - a[1])
    }

    /// Classifies a score point; 1 (true) means treated.
    pub fn assign(&self, x: &ScorePoint) -> Result<bool> {
        if x.dim() != self.dim() {
            return Err(Error::Dimension { expected: self.dim(), got: x.dim() });
        }
        Ok(match self {
            AssignmentRule::UnivariateThreshold { cutoff } => x.coords()[0] >= *cutoff,
            AssignmentRule::HalfPlane { normal, offset } => {
                let dot: f64 = normal.iter().zip(x.coords()).map(|(n, c)| n * c).sum();
                dot >= *offset
            }
            AssignmentRule::CurveBoundary { vertices, treated_side } => {
                let h = Self::curve_height(vertices, x.coords()[0]);
                match treated_side {
                    CurveSide::Below => x.coords()[1] <= h,
                    CurveSide::Above => x.coords()[1] >= h,
                }
            }
        })
    }
}

/// Free-function form of [`AssignmentRule::assign`].
pub fn assign(rule: &AssignmentRule, x: &ScorePoint) -> Result<bool> {
    rule.assign(x)
}

/// Default probe radii scale factors used by [`probe_boundary_default`].
pub const PROBE_RADIUS_FACTORS: [f64; 3] = [1e-1, 1e-2, 1e-3];
/// Default probe count per radius.
pub const PROBES_PER_RADIUS: usize = 64;
/// Fixed seed for the default boundary probe, so constructors are pure.
const PROBE_SEED: u64 = 0x5EED_B00B;

/// Randomized check of the treatment-boundary definition: `x` lies on the
/// boundary when every ball around it contains both treated and control
/// scores. For each radius, `probes_per_radius` points are drawn uniformly in
/// the ball and both classes must appear. Deterministic given `seed`.
pub fn probe_boundary(
    rule: &AssignmentRule,
    x: &ScorePoint,
    radii: &[f64],
    probes_per_radius: usize,
    seed: u64,
) -> Result<bool> {
    if x.dim() != rule.dim() {
        return Err(Error::Dimension { expected: rule.dim(), got: x.dim() });
    }
    if radii.is_empty() {
        return Err(Error::Config("probe radii list must be non-empty".into()));
    }
    if radii.iter().any(|r| !r.is_finite() || *r <= 0.0) {
        return Err(Error::Config("probe radii must be strictly positive".into()));
    }
    if probes_per_radius == 0 {
        return Err(Error::Config("need at least one probe per radius".into()));
    }

    let d = x.dim();
    let mut rng = rng_from(seed, &[0x9b0b]);
    let mut probe = vec![0.0; d];
    for &radius in radii {
        let mut seen_treated = false;
        let mut seen_control = false;
        for _ in 0..probes_per_radius {
            // Uniform draw in the ball: normalized Gaussian direction scaled
            // by radius * U^(1/d).
            let mut norm2 = 0.0;
            for slot in probe.iter_mut() {
                let z: f64 = StandardNormal.sample(&mut rng);
                *slot = z;
                norm2 += z * z;
            }
            let norm = norm2.sqrt().max(f64::MIN_POSITIVE);
            let r = radius * rng.random::<f64>().powf(1.0 / d as f64);
            let point = ScorePoint::new(
                probe
                    .iter()
                    .zip(x.coords())
                    .map(|(dir, c)| c + r * dir / norm)
                    .collect(),
            )?;
            if rule.assign(&point)? {
                seen_treated = true;
            } else {
                seen_control = true;
            }
            if seen_treated && seen_control {
                break;
            }
        }
        if !(seen_treated && seen_control) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// [`probe_boundary`] with the default radii (1e-1, 1e-2, 1e-3 of the score
/// scale), 64 probes per radius, and a fixed seed.
pub fn probe_boundary_default(rule: &AssignmentRule, x: &ScorePoint) -> Result<bool> {
    let scale = x
        .coords()
        .iter()
        .fold(1.0_f64, |acc, c| acc.max(c.abs()));
    let radii: Vec<f64> = PROBE_RADIUS_FACTORS.iter().map(|f| f * scale).collect();
    probe_boundary(rule, x, &radii, PROBES_PER_RADIUS, PROBE_SEED)
}

/// A score point verified to lie on the treatment boundary of its rule.
#[derive(Clone, Debug)]
pub struct BoundaryPoint {
    point: ScorePoint,
    rule: AssignmentRule,
}

impl BoundaryPoint {
    /// Verifies the probe test with default settings before accepting.
    pub fn new(point: ScorePoint, rule: AssignmentRule) -> Result<Self> {
        rule.validate()?;
        if !probe_boundary_default(&rule, &point)? {
            return Err(Error::Boundary(format!(
                "{:?} failed the boundary probe for the supplied rule",
                point.coords()
            )));
        }
        Ok(Self { point, rule })
    }

    pub fn point(&self) -> &ScorePoint {
        &self.point
    }

    pub fn rule(&self) -> &AssignmentRule {
        &self.rule
    }
}

/// One observation: outcome, score, and binary treatment label.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledSample {
    pub y: f64,
    pub x: ScorePoint,
    pub treated: bool,
}

/// An immutable sample of labeled observations with a common score dimension.
///
/// Stored column-wise; `xs` is row-major `n x dim`.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    dim: usize,
    ys: Vec<f64>,
    xs: Vec<f64>,
    treated: Vec<bool>,
}

impl Dataset {
    pub fn new(dim: usize, ys: Vec<f64>, xs: Vec<f64>, treated: Vec<bool>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Config("dataset dimension must be at least 1".into()));
        }
        let n = ys.len();
        if n == 0 {
            return Err(Error::Config("dataset must contain at least one row".into()));
        }
        if xs.len() != n * dim || treated.len() != n {
            return Err(Error::Config("dataset column lengths are inconsistent".into()));
        }
        if ys.iter().any(|v| !v.is_finite()) || xs.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("dataset values must be finite".into()));
        }
        Ok(Self { dim, ys, xs, treated })
    }

    pub fn from_rows(rows: Vec<LabeledSample>) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::Config("dataset must contain at least one row".into()));
        }
        let dim = rows[0].x.dim();
        let mut ys = Vec::with_capacity(n);
        let mut xs = Vec::with_capacity(n * dim);
        let mut treated = Vec::with_capacity(n);
        for row in rows {
            if row.x.dim() != dim {
                return Err(Error::Dimension { expected: dim, got: row.x.dim() });
            }
            ys.push(row.y);
            xs.extend_from_slice(row.x.coords());
            treated.push(row.treated);
        }
        Self::new(dim, ys, xs, treated)
    }

    pub fn n(&self) -> usize {
        self.ys.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn y(&self, i: usize) -> f64 {
        self.ys[i]
    }

    pub fn ys(&self) -> &[f64] {
        &self.ys
    }

    pub fn x_row(&self, i: usize) -> &[f64] {
        &self.xs[i * self.dim..(i + 1) * self.dim]
    }

    /// Flat row-major score matrix.
    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn is_treated(&self, i: usize) -> bool {
        self.treated[i]
    }

    pub fn treated_labels(&self) -> &[bool] {
        &self.treated
    }

    pub fn row(&self, i: usize) -> LabeledSample {
        LabeledSample {
            y: self.ys[i],
            x: ScorePoint { coords: self.x_row(i).to_vec() },
            treated: self.treated[i],
        }
    }

    /// Checks that every stored label agrees with `rule`.
    pub fn validate_rule(&self, rule: &AssignmentRule) -> Result<()> {
        if rule.dim() != self.dim {
            return Err(Error::Dimension { expected: self.dim, got: rule.dim() });
        }
        for i in 0..self.n() {
            let point = ScorePoint { coords: self.x_row(i).to_vec() };
            if rule.assign(&point)? != self.treated[i] {
                return Err(Error::Config(format!(
                    "row {i}: stored treatment label disagrees with the assignment rule"
                )));
            }
        }
        Ok(())
    }

    /// Reads the CSV format `y,x1,...,xd[,d]`.
    ///
    /// When the trailing `d` column is absent a rule is required to label the
    /// rows; when both are present the stored labels are validated against
    /// the rule.
    pub fn read_csv<R: Read>(reader: R, rule: Option<&AssignmentRule>) -> Result<Self> {
        let mut csv_reader = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
        let headers = csv_reader.headers()?.clone();
        let cols: Vec<&str> = headers.iter().collect();
        if cols.is_empty() || cols[0] != "y" {
            return Err(Error::Config("CSV header must start with column 'y'".into()));
        }
        let has_d = cols.last() == Some(&"d");
        let dim = cols.len() - 1 - usize::from(has_d);
        if dim == 0 {
            return Err(Error::Config("CSV must contain at least one score column".into()));
        }
        for (k, name) in cols[1..1 + dim].iter().enumerate() {
            let expected = format!("x{}", k + 1);
            if *name != expected {
                return Err(Error::Config(format!(
                    "CSV header column {} must be '{expected}', got '{name}'",
                    k + 1
                )));
            }
        }
        if !has_d && rule.is_none() {
            return Err(Error::Config(
                "CSV has no 'd' column; an assignment rule is required to label rows".into(),
            ));
        }

        let mut rows = Vec::new();
        for (line, record) in csv_reader.records().enumerate() {
            let record = record?;
            let parse = |idx: usize| -> Result<f64> {
                record
                    .get(idx)
                    .ok_or_else(|| Error::Config(format!("row {line}: missing field {idx}")))?
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Config(format!("row {line}: {e}")))
            };
            let y = parse(0)?;
            let coords: Vec<f64> = (0..dim).map(|k| parse(1 + k)).collect::<Result<_>>()?;
            let x = ScorePoint::new(coords)?;
            let treated = if has_d {
                match record.get(1 + dim).map(str::trim) {
                    Some("0") => false,
                    Some("1") => true,
                    other => {
                        return Err(Error::Config(format!(
                            "row {line}: treatment label must be 0 or 1, got {other:?}"
                        )))
                    }
                }
            } else {
                rule.expect("checked above").assign(&x)?
            };
            rows.push(LabeledSample { y, x, treated });
        }
        let data = Self::from_rows(rows)?;
        if has_d {
            if let Some(rule) = rule {
                data.validate_rule(rule)?;
            }
        }
        Ok(data)
    }

    pub fn read_csv_path<P: AsRef<Path>>(path: P, rule: Option<&AssignmentRule>) -> Result<Self> {
        Self::read_csv(std::fs::File::open(path)?, rule)
    }

    /// Writes `y,x1,...,xd,d` with full (round-trippable) float precision.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(writer);
        let mut header = vec!["y".to_string()];
        header.extend((1..=self.dim).map(|k| format!("x{k}")));
        header.push("d".into());
        out.write_record(&header)?;
        for i in 0..self.n() {
            let mut record = vec![format!("{}", self.ys[i])];
            record.extend(self.x_row(i).iter().map(|v| format!("{v}")));
            record.push(if self.treated[i] { "1".into() } else { "0".into() });
            out.write_record(&record)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn write_csv_path<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }

    /// Keeps the rows at `indices`, in order.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        let mut ys = Vec::with_capacity(indices.len());
        let mut xs = Vec::with_capacity(indices.len() * self.dim);
        let mut treated = Vec::with_capacity(indices.len());
        for &i in indices {
            ys.push(self.ys[i]);
            xs.extend_from_slice(self.x_row(i));
            treated.push(self.treated[i]);
        }
        Self::new(self.dim, ys, xs, treated)
    }
}

/// Partitions `data` into (treated, control) by `rule`, preserving row order.
///
/// Errors with `EmptySide` when either side has no rows, since side-wise
/// estimation would be impossible.
pub fn split_by_treatment(data: &Dataset, rule: &AssignmentRule) -> Result<(Dataset, Dataset)> {
    if rule.dim() != data.dim() {
        return Err(Error::Dimension { expected: data.dim(), got: rule.dim() });
    }
    let mut treated_idx = Vec::new();
    let mut control_idx = Vec::new();
    for i in 0..data.n() {
        let point = ScorePoint { coords: data.x_row(i).to_vec() };
        if rule.assign(&point)? {
            treated_idx.push(i);
        } else {
            control_idx.push(i);
        }
    }
    if treated_idx.is_empty() {
        return Err(Error::EmptySide(Side::Treated));
    }
    if control_idx.is_empty() {
        return Err(Error::EmptySide(Side::Control));
    }
    Ok((data.subset(&treated_idx)?, data.subset(&control_idx)?))
}

/// Point estimate with standard error and a symmetric normal interval.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub estimate: f64,
    pub std_error: f64,
    pub level: f64,
    pub ci_lower: f64,
    pub ci_upper: f64,
    pub n_treated: usize,
    pub n_control: usize,
}

impl EstimateReport {
    /// Builds the interval as estimate +- z(level) * std_error.
    pub fn from_moments(
        estimate: f64,
        std_error: f64,
        level: f64,
        n_treated: usize,
        n_control: usize,
    ) -> Result<Self> {
        if std_error.is_nan() || std_error < 0.0 {
            return Err(Error::Numerical(format!(
                "standard error must be nonnegative, got {std_error}"
            )));
        }
        let z = normal_critical_value(level)?;
        Ok(Self {
            estimate,
            std_error,
            level,
            ci_lower: estimate - z * std_error,
            ci_upper: estimate + z * std_error,
            n_treated,
            n_control,
        })
    }

    pub fn covers(&self, value: f64) -> bool {
        self.ci_lower <= value && value <= self.ci_upper
    }

    pub fn ci_length(&self) -> f64 {
        self.ci_upper - self.ci_lower
    }
}
