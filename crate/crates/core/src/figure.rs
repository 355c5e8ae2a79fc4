//! The four quadratic examples drawn as region, boundary and eigenvalue cloud.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;
use serde_json::json;

use crate::error::{Error, Result};
use crate::linalg::C64;
use crate::ncpoly::{NCPolynomial, QuadraticForm, VariableKind};
use crate::quadratic::{
    equivalence_conditions, membership, radius_field, EquivalenceReport, Method, VERDICT_BAND,
};
use crate::region::{emit_svg, scan, scan_nodes, GridSpec, RegionRaster, SvgStyle, DEFAULT_NODES};
use crate::rmt::{containment, eigen_cloud, sample, Containment, RNG_NAME, VARIANCE_CONVENTION};

/// Slack on `r(Q) >= 1` when counting eigenvalues inside the region.
pub const DEFAULT_DILATION: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum FigureCase {
    A,
    B,
    C,
    D,
}

impl FigureCase {
    pub const ALL: [FigureCase; 4] = [FigureCase::A, FigureCase::B, FigureCase::C, FigureCase::D];

    pub fn polynomial_text(self) -> &'static str {
        match self {
            FigureCase::A => "0.5*c1^2+0.5*c1*c2+0.5*c2*c1+0.5*c2^2+0.5*c1+0.5*c2",
            FigureCase::B => "c1*c2+c2*c1+c1+c2",
            FigureCase::C => "c1^2+c2*c1-c2^2+c1+1i*c2",
            FigureCase::D => "(0.5i)*c1^2+c1*c2+2*c2*c1+c2^2",
        }
    }

    pub fn polynomial(self) -> NCPolynomial {
        NCPolynomial::parse(self.polynomial_text(), 2, VariableKind::Circular)
            .expect("built-in polynomial parses")
    }

    pub fn form(self) -> QuadraticForm {
        self.polynomial().extract_quadratic().expect("built-in polynomial is quadratic")
    }

    /// Plot window with a margin around the region, sampled at `nodes^2` points.
    pub fn window(self, nodes: usize) -> GridSpec {
        let (re0, re1, im0, im1) = match self {
            FigureCase::A => (-2.5, 2.5, -2.5, 2.5),
            FigureCase::B => (-3.0, 3.5, -3.0, 3.0),
            FigureCase::C => (-3.0, 3.5, -3.0, 3.5),
            FigureCase::D => (-3.5, 3.5, -3.5, 3.5),
        };
        GridSpec::new(re0, re1, im0, im1, nodes, nodes).expect("valid built-in window")
    }
}

impl fmt::Display for FigureCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            FigureCase::A => "A",
            FigureCase::B => "B",
            FigureCase::C => "C",
            FigureCase::D => "D",
        };
        f.write_str(s)
    }
}

impl FromStr for FigureCase {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_uppercase().as_str() {
            "A" => Ok(FigureCase::A),
            "B" => Ok(FigureCase::B),
            "C" => Ok(FigureCase::C),
            "D" => Ok(FigureCase::D),
            _ => Err(format!("unknown case '{s}' (expected A, B, C or D)")),
        }
    }
}

/// `r(Q_lambda)` on the grid, with verdicts from `method`.
///
/// The radius field always drives the contour. Verdicts come from the field
/// when the radius test is used, and from per-node membership otherwise.
pub fn quadratic_raster(form: &QuadraticForm, grid: GridSpec, method: Method) -> RegionRaster {
    let mut raster = scan(|z| radius_field(form, z), grid, 1.0, VERDICT_BAND);
    let from_field = match method {
        Method::Radius => true,
        Method::Auto => equivalence_conditions(form).radius_test_valid,
        Method::Limit => false,
    };
    if !from_field {
        raster.verdicts = scan_nodes(|z| membership(form, z, method).verdict, &grid);
    }
    raster
}

#[derive(Clone, Debug)]
pub struct FigureConfig {
    pub case: FigureCase,
    pub matrix_size: usize,
    pub seed: u64,
    pub grid: GridSpec,
    pub method: Method,
    pub dilation: f64,
}

impl FigureConfig {
    pub fn new(case: FigureCase, matrix_size: usize, seed: u64) -> Self {
        Self {
            case,
            matrix_size,
            seed,
            grid: case.window(DEFAULT_NODES),
            method: Method::Auto,
            dilation: DEFAULT_DILATION,
        }
    }
}

#[derive(Clone, Debug)]
pub struct FigureOutput {
    pub config: FigureConfig,
    pub raster: RegionRaster,
    pub equivalence: EquivalenceReport,
    pub cloud: Vec<C64>,
    pub containment: Containment,
    pub svg: String,
}

impl FigureOutput {
    pub fn metadata(&self) -> serde_json::Value {
        let c = &self.config;
        json!({
            "command": "figure1",
            "case": c.case.to_string(),
            "polynomial": c.case.polynomial_text(),
            "matrix_size": c.matrix_size,
            "seed": c.seed,
            "rng": RNG_NAME,
            "variance": VARIANCE_CONVENTION,
            "method": c.method,
            "dilation": c.dilation,
            "equivalence": self.equivalence,
            "containment": self.containment,
        })
    }
}

pub fn run_figure(config: FigureConfig) -> Result<FigureOutput> {
    if config.matrix_size == 0 {
        return Err(Error::Dimension("matrix size must be at least 1".into()));
    }
    let case = config.case;
    let p = case.polynomial();
    let form = case.form();
    let equivalence = equivalence_conditions(&form);
    let raster = quadratic_raster(&form, config.grid, config.method);
    let g = sample(2, config.matrix_size, config.seed)?;
    let cloud = eigen_cloud(&p, &g)?;
    let containment = containment(&cloud, |z| radius_field(&form, z), 1.0, config.dilation);
    let style = SvgStyle {
        title: Some(format!("({case}) f = {}", p)),
        ..SvgStyle::default()
    };
    let svg = emit_svg(&raster, &raster.boundary, &cloud, &style);
    Ok(FigureOutput {
        config,
        raster,
        equivalence,
        cloud,
        containment,
        svg,
    })
}
