use serde::Serialize;

/// Whether a point belongs to the spectrum.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Spectrum,
    Resolvent,
    /// Too close to the spectral boundary for the method to decide.
    #[serde(rename = "uncertain")]
    BoundaryUncertain,
}

impl Verdict {
    pub fn is_conclusive(self) -> bool {
        self != Verdict::BoundaryUncertain
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Spectrum => "spectrum",
            Verdict::Resolvent => "resolvent",
            Verdict::BoundaryUncertain => "uncertain",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "spectrum" => Some(Verdict::Spectrum),
            "resolvent" => Some(Verdict::Resolvent),
            "uncertain" => Some(Verdict::BoundaryUncertain),
            _ => None,
        }
    }

    /// Verdict for a continuous field whose spectrum is `{value >= level}`.
    pub fn from_field(value: f64, level: f64, band: f64) -> Self {
        if value >= level + band {
            Verdict::Spectrum
        } else if value < level - band {
            Verdict::Resolvent
        } else {
            Verdict::BoundaryUncertain
        }
    }
}

/// Numbers behind a verdict; only the fields relevant to the method are set.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Diagnostics {
    pub method: Option<&'static str>,
    pub spectral_radius: Option<f64>,
    pub decay_ratio: Option<f64>,
    pub levels: Option<usize>,
    pub iterations: Option<usize>,
    /// Partial sum of level sums, approximating `||(lambda - f)^{-1}||_2^2`.
    pub resolvent_norm_sq: Option<f64>,
    pub truncated: bool,
    /// Two methods were run and disagreed.
    pub disagreement: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MembershipVerdict {
    pub verdict: Verdict,
    pub diagnostics: Diagnostics,
}

impl MembershipVerdict {
    pub fn new(verdict: Verdict, diagnostics: Diagnostics) -> Self {
        Self {
            verdict,
            diagnostics,
        }
    }

    pub fn bare(verdict: Verdict, method: &'static str) -> Self {
        Self::new(
            verdict,
            Diagnostics {
                method: Some(method),
                ..Default::default()
            },
        )
    }

    pub fn is_conclusive(&self) -> bool {
        self.verdict.is_conclusive()
    }
}
