//! Classification of (ω₀^R, ω^R, g) into the regimes of the Rabi model.
//!
//! Every region is a conjunction of ratio inequalities. "x ≪ y" means
//! `x < much_less·y` and "x ∼ y" means the ratio lies within
//! `similar_factor` either way. For each region the classifier computes a
//! margin: the smallest log-ratio by which its inequalities hold (negative if
//! any fails). Labels follow the precedence
//!
//! `dirac_line → DSC → USC → JC → AJC → decoupling → dispersive → intermediate`
//!
//! and a point whose winning margin is below `ln(1 + transition_band)`, or that
//! satisfies no region at all, is reported as a transition between the two
//! regions that fit best. USC is taken as `g ≤ |ω^R| < g/much_less` so that it
//! borders DSC below and the weak-coupling regions above.
//!
//! Only ratios enter, so labels are invariant under a common rescaling.

use std::{fmt, io};

use serde::{Deserialize, Serialize};

use crate::{hamiltonian::QrmParams, QrmError, Result};

const DIRAC_REL_TOL: f64 = 1e-12;
/// Margins are compared with this slack so that grid points lying exactly
/// on a boundary get the same label at every scale.
const MARGIN_EPS: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegimeThresholds {
    /// x ≪ y when x < much_less · y.
    pub much_less: f64,
    /// Relative width of the boundary zones.
    pub transition_band: f64,
    /// x ∼ y when max(x/y, y/x) < similar_factor.
    pub similar_factor: f64,
}

impl Default for RegimeThresholds {
    fn default() -> Self {
        Self { much_less: 0.1, transition_band: 0.2, similar_factor: 2.0 }
    }
}

impl RegimeThresholds {
    pub fn validate(&self) -> Result<()> {
        if !(self.much_less > 0.0 && self.much_less < 1.0) {
            return Err(QrmError::InvalidParameters(format!(
                "much_less must lie in (0, 1), got {}",
                self.much_less
            )));
        }
        if !(self.transition_band >= 0.0 && self.transition_band.is_finite()) {
            return Err(QrmError::InvalidParameters("transition_band must be non-negative".into()));
        }
        if !(self.similar_factor > 1.0 && self.similar_factor.is_finite()) {
            return Err(QrmError::InvalidParameters("similar_factor must exceed 1".into()));
        }
        Ok(())
    }
}

/// Two-dimensional regions of the parameter space.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Region {
    Dsc,
    Usc,
    Jc,
    Ajc,
    Decoupling,
    Dispersive,
    Intermediate,
}

impl Region {
    /// Precedence order used by [`classify`].
    pub const PRECEDENCE: [Region; 7] = [
        Region::Dsc,
        Region::Usc,
        Region::Jc,
        Region::Ajc,
        Region::Decoupling,
        Region::Dispersive,
        Region::Intermediate,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Region::Dsc => "DSC",
            Region::Usc => "USC",
            Region::Jc => "JC",
            Region::Ajc => "AJC",
            Region::Decoupling => "decoupling",
            Region::Dispersive => "dispersive",
            Region::Intermediate => "intermediate",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RegimeLabel {
    Jc,
    Ajc,
    Dispersive,
    Usc,
    Dsc,
    Decoupling,
    Intermediate,
    DiracLine,
    Transition(Region, Region),
}

impl From<Region> for RegimeLabel {
    fn from(r: Region) -> Self {
        match r {
            Region::Dsc => RegimeLabel::Dsc,
            Region::Usc => RegimeLabel::Usc,
            Region::Jc => RegimeLabel::Jc,
            Region::Ajc => RegimeLabel::Ajc,
            Region::Decoupling => RegimeLabel::Decoupling,
            Region::Dispersive => RegimeLabel::Dispersive,
            Region::Intermediate => RegimeLabel::Intermediate,
        }
    }
}

impl fmt::Display for RegimeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RegimeLabel::Jc => f.write_str("JC"),
            RegimeLabel::Ajc => f.write_str("AJC"),
            RegimeLabel::Dispersive => f.write_str("dispersive"),
            RegimeLabel::Usc => f.write_str("USC"),
            RegimeLabel::Dsc => f.write_str("DSC"),
            RegimeLabel::Decoupling => f.write_str("decoupling"),
            RegimeLabel::Intermediate => f.write_str("intermediate"),
            RegimeLabel::DiracLine => f.write_str("dirac_line"),
            RegimeLabel::Transition(a, b) => write!(f, "transition({}|{})", a.name(), b.name()),
        }
    }
}

/// Log-margin of `x < c·y` for non-negative x, y.
fn below(x: f64, y: f64, c: f64) -> f64 {
    match (x == 0.0, y == 0.0) {
        (_, true) => f64::NEG_INFINITY,
        (true, false) => f64::INFINITY,
        _ => (c * y / x).ln(),
    }
}

/// Log-margin of `x ∼ y` within `factor`.
fn similar(x: f64, y: f64, factor: f64) -> f64 {
    match (x == 0.0, y == 0.0) {
        (true, true) => factor.ln(),
        (true, false) | (false, true) => f64::NEG_INFINITY,
        _ => factor.ln() - (x / y).ln().abs(),
    }
}

fn min_of(xs: &[f64]) -> f64 {
    xs.iter().copied().fold(f64::INFINITY, f64::min)
}

/// Margin by which `params` lies inside `region` (negative when outside).
pub fn region_margin(region: Region, params: &QrmParams, th: &RegimeThresholds) -> f64 {
    let w = params.omega_r.abs();
    let w0 = params.omega0_r.abs();
    let g = params.g.abs();
    let sum = (params.omega_r + params.omega0_r).abs();
    let diff = (params.omega_r - params.omega0_r).abs();
    let ml = th.much_less;
    match region {
        Region::Dsc => below(w, g, 1.0),
        Region::Usc => min_of(&[below(w, g, 1.0 / ml), -below(w, g, 1.0)]),
        Region::Jc => min_of(&[below(g, w, ml), below(g, w0, ml), below(diff, sum, ml)]),
        Region::Ajc => min_of(&[below(g, w, ml), below(g, w0, ml), below(sum, diff, ml)]),
        Region::Decoupling => min_of(&[below(w0, g, ml), below(g, w, ml)]),
        Region::Dispersive => min_of(&[below(g, w, ml), below(g, w0, ml), below(g, diff, ml), below(g, sum, ml)]),
        Region::Intermediate => min_of(&[similar(w0, g, th.similar_factor), below(g, w, ml)]),
    }
}

fn on_dirac_line(params: &QrmParams) -> bool {
    let scale = params.omega0_r.abs().max(params.g.abs());
    params.omega_r.abs() <= DIRAC_REL_TOL * scale || params.omega_r == 0.0
}

/// Assign exactly one label to a parameter triple.
pub fn classify(params: &QrmParams, thresholds: &RegimeThresholds) -> RegimeLabel {
    if on_dirac_line(params) {
        return RegimeLabel::DiracLine;
    }
    let margins: Vec<(Region, f64)> = Region::PRECEDENCE
        .iter()
        .map(|&r| (r, region_margin(r, params, thresholds)))
        .collect();
    let band = thresholds.transition_band.ln_1p();
    let best_other = |exclude: Region| {
        margins
            .iter()
            .filter(|(r, _)| *r != exclude)
            .fold(None::<(Region, f64)>, |acc, &(r, m)| match acc {
                Some((_, best)) if best >= m => acc,
                _ => Some((r, m)),
            })
            .map(|(r, _)| r)
            .expect("at least two regions")
    };
    match margins.iter().find(|(_, m)| *m > MARGIN_EPS) {
        Some(&(region, m)) if m >= band - MARGIN_EPS => region.into(),
        Some(&(region, _)) => RegimeLabel::Transition(region, best_other(region)),
        None => {
            let best = margins
                .iter()
                .fold(margins[0], |acc, &x| if x.1 > acc.1 { x } else { acc })
                .0;
            RegimeLabel::Transition(best, best_other(best))
        }
    }
}

/// Evenly spaced axis values, `steps` points from `min` to `max`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AxisRange {
    pub min: f64,
    pub max: f64,
    pub steps: usize,
}

impl AxisRange {
    pub fn values(&self) -> Vec<f64> {
        match self.steps {
            0 => Vec::new(),
            1 => vec![self.min],
            n => (0..n)
                .map(|k| self.min + (self.max - self.min) * k as f64 / (n - 1) as f64)
                .collect(),
        }
    }
}

/// Grid over ω₀^R/g (rows) and ω^R/g (columns) at a fixed coupling.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegimeGrid {
    pub omega0_over_g: AxisRange,
    pub omega_over_g: AxisRange,
    #[serde(default = "unit_coupling")]
    pub g: f64,
}

fn unit_coupling() -> f64 {
    1.0
}

impl RegimeGrid {
    pub fn validate(&self) -> Result<()> {
        let axes = [self.omega0_over_g, self.omega_over_g];
        if axes.iter().any(|a| a.steps == 0 || !a.min.is_finite() || !a.max.is_finite()) {
            return Err(QrmError::InvalidParameters("grid axes need finite bounds and at least one step".into()));
        }
        if !(self.g.is_finite() && self.g != 0.0) {
            return Err(QrmError::InvalidParameters("grid coupling must be finite and nonzero".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegimePoint {
    pub params: QrmParams,
    pub label: RegimeLabel,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RegimeMap {
    pub rows: usize,
    pub cols: usize,
    /// Row-major: ω₀^R varies slowest.
    pub points: Vec<RegimePoint>,
}

impl RegimeMap {
    pub fn get(&self, row: usize, col: usize) -> &RegimePoint {
        &self.points[row * self.cols + col]
    }

    /// CSV with columns `omega0_R,omega_R,g,label`.
    pub fn write_csv<W: io::Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "omega0_R,omega_R,g,label")?;
        for p in &self.points {
            writeln!(out, "{},{},{},{}", p.params.omega0_r, p.params.omega_r, p.params.g, p.label)?;
        }
        Ok(())
    }
}

/// Parameter triples of a grid in row-major order.
pub fn grid_points(grid: &RegimeGrid) -> Vec<QrmParams> {
    let w0s = grid.omega0_over_g.values();
    let ws = grid.omega_over_g.values();
    w0s.iter()
        .flat_map(|&a| ws.iter().map(move |&b| QrmParams::new(a * grid.g, b * grid.g, grid.g)))
        .collect()
}

/// Classify every grid point.
pub fn regime_map(grid: &RegimeGrid, thresholds: &RegimeThresholds) -> Result<RegimeMap> {
    grid.validate()?;
    thresholds.validate()?;
    let points = grid_points(grid)
        .into_iter()
        .map(|params| RegimePoint { params, label: classify(&params, thresholds) })
        .collect();
    Ok(RegimeMap { rows: grid.omega0_over_g.steps, cols: grid.omega_over_g.steps, points })
}
