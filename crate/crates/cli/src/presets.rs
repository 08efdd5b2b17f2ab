use magscat_core::coeffs::{Bump, GeneratorSpec, MagneticTerm};

use crate::config::Component;

/// Named coefficient generators.
#[derive(Debug, Clone, PartialEq)]
pub struct Preset {
    pub coefficients: GeneratorSpec,
    pub reference: GeneratorSpec,
    pub recover: Vec<Component>,
}

pub const NAMES: [&str; 6] = ["free", "weak-V", "magnetic-sweep", "pure-gauge", "generic", "diverging"];

/// Swirl plus directed term: nonzero curl and divergence.
pub fn generic_magnetic() -> Vec<MagneticTerm> {
    vec![
        MagneticTerm::Swirl { bump: Bump::new(0.3, [0.3, 0.0, -0.2], 1.2), axis: [0.0, 0.0, 1.0] },
        MagneticTerm::Directed { bump: Bump::new(0.15, [-0.4, 0.3, 0.2], 1.1), direction: [0.3, 1.0, -0.5] },
    ]
}

pub fn weak_potential() -> Bump {
    Bump::new(1e-2, [0.3, 0.0, -0.2], 1.5)
}

pub fn sweep_coefficients() -> GeneratorSpec {
    GeneratorSpec {
        magnetic: vec![
            MagneticTerm::Swirl { bump: Bump::new(0.3, [0.2, 0.0, -0.1], 1.0), axis: [0.0, 0.0, 1.0] },
            MagneticTerm::Directed { bump: Bump::new(0.2, [0.0, 0.3, 0.0], 0.9), direction: [0.0, 1.0, 0.5] },
        ],
        electric: vec![Bump::new(0.5, [0.0; 3], 1.0)],
    }
}

pub fn pure_gauge() -> Vec<MagneticTerm> {
    vec![MagneticTerm::Gradient { bump: Bump::new(0.6, [0.2, 0.1, 0.0], 1.2) }]
}

impl Preset {
    pub fn by_name(name: &str) -> Option<Preset> {
        let zero = GeneratorSpec::default();
        let p = match name {
            "free" => Preset { coefficients: zero.clone(), reference: zero, recover: vec![Component::DA] },
            "weak-V" => Preset {
                coefficients: GeneratorSpec { magnetic: vec![], electric: vec![weak_potential()] },
                reference: zero,
                recover: vec![Component::V],
            },
            "magnetic-sweep" => Preset { coefficients: sweep_coefficients(), reference: zero, recover: vec![Component::DA] },
            "pure-gauge" => Preset {
                coefficients: GeneratorSpec { magnetic: pure_gauge(), electric: vec![] },
                reference: zero,
                recover: vec![Component::DA],
            },
            "generic" => Preset {
                coefficients: GeneratorSpec { magnetic: generic_magnetic(), electric: vec![] },
                reference: zero,
                recover: vec![Component::DA],
            },
            "diverging" => Preset {
                coefficients: GeneratorSpec { magnetic: vec![], electric: vec![Bump::new(-1e4, [0.0; 3], 1.0)] },
                reference: zero,
                recover: vec![Component::V],
            },
            _ => return None,
        };
        Some(p)
    }
}
