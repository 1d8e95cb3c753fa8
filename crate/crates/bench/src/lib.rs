//! Fixtures shared by the criterion benches.

use lbgame_core::experiments::{builtin_setting, generate_instance, Feasibility, GeneratorSpec, SettingInstance};
use lbgame_core::Instance;

/// Instance of a fixed catalog setting.
pub fn fixed_setting(id: u8) -> Instance {
    match builtin_setting(id).expect("catalog setting").instance {
        SettingInstance::Fixed(inst) => inst,
        SettingInstance::Generated(spec) => generate_instance(&spec, Feasibility::Sequential).expect("feasible"),
    }
}

/// Random instance in the style of the scaling grid experiment.
pub fn random_instance(n: usize, m: usize, seed: u64) -> Instance {
    let spec = GeneratorSpec { n, m, mu_range: (1.0, 2.0), lambda_range: (0.0, 1.0), s0_range: (10.0, 20.0), seed };
    generate_instance(&spec, Feasibility::Sequential).expect("feasible")
}
