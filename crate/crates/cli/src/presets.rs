use crate::config::{ScenarioConfig, ScenarioKind};

pub struct Preset {
    pub kind: ScenarioKind,
    pub description: &'static str,
}

/// The preset catalog, in a fixed order.
pub const PRESETS: [Preset; 7] = [
    Preset {
        kind: ScenarioKind::FreeBaseline,
        description: "zero coefficient: closed-form Krein and Dirac solutions, log-integrals of model densities, free spectral density and its normalization",
    },
    Preset {
        kind: ScenarioKind::DecayingRegime,
        description: "W = -0.2/(x+1): Riccati fixed point, solution bounds and growth band, sine asymptotics, no-dip scan, positive density, bounded transfer matrices",
    },
    Preset {
        kind: ScenarioKind::SquareIntegrableTails,
        description: "W = (x+1)^-0.8, square integrable but not integrable: bounded transfer matrices at random spectral parameters, iterated-integral series accuracy",
    },
    Preset {
        kind: ScenarioKind::SmoothTransform,
        description: "potential synthesized from a smooth cosine transform: round trip, tail of the remainder, positive density",
    },
    Preset {
        kind: ScenarioKind::EmbeddedEigenvalue,
        description: "q = 8 sin(2x)/x: embedded eigenvalue at energy 1 located by the tail-ratio scan and stable when the range doubles",
    },
    Preset {
        kind: ScenarioKind::OscillatingGrid,
        description: "A = (x^2+1)^-a sin(x^b) on an (a, b) grid: bounded P*(x, i) without square integrability, against A = -exp(-x)",
    },
    Preset {
        kind: ScenarioKind::AccelerantRoundTrip,
        description: "constant and cosine accelerants: resolvent convergence order, and P, P* from the resolvent against the Krein ODE",
    },
];

pub fn preset(name: &str) -> Option<ScenarioConfig> {
    ScenarioKind::from_name(name).map(ScenarioConfig::new)
}

/// One line per preset: name and description.
pub fn catalog() -> String {
    PRESETS
        .iter()
        .map(|p| format!("{:<22} {}\n", p.kind.name(), p.description))
        .collect()
}
