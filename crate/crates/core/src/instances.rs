//! Named benchmark instances.

use crate::model::{BanditInstance, DistributionFamily};

const UNIT_GAUSSIAN: DistributionFamily = DistributionFamily::Gaussian { variance: 1.0 };

fn build(family: DistributionFamily, means: &[f64]) -> BanditInstance {
    BanditInstance::new(family, means.to_vec()).expect("preset instances are valid")
}

pub fn nu1() -> BanditInstance {
    build(DistributionFamily::Bernoulli, &[0.3, 0.21, 0.2, 0.19, 0.18])
}

pub fn nu2() -> BanditInstance {
    build(DistributionFamily::Bernoulli, &[0.5, 0.4, 0.3, 0.2, 0.1])
}

pub fn nu3() -> BanditInstance {
    build(DistributionFamily::Bernoulli, &[0.5, 0.45, 0.43, 0.4])
}

pub fn nu4() -> BanditInstance {
    build(UNIT_GAUSSIAN, &[0.5, 0.25, 0.0, -0.25, -0.5])
}

pub fn nu5() -> BanditInstance {
    build(UNIT_GAUSSIAN, &[1.2, 1.0, 1.0, 1.0, 1.0])
}

pub fn nu6() -> BanditInstance {
    build(
        UNIT_GAUSSIAN,
        &[-1.9, -0.6, -0.5, -0.4, -0.3, -0.1, 0.0, 0.1, 0.4, 1.8],
    )
}

/// Bernoulli instance used for the sample-complexity comparisons.
pub fn bernoulli_benchmark() -> BanditInstance {
    build(DistributionFamily::Bernoulli, &[0.8, 0.5, 0.3, 0.29, 0.06])
}

/// Gaussian instance used for the sample-complexity comparisons (same means as `nu5`).
pub fn gaussian_benchmark() -> BanditInstance {
    nu5()
}

/// The six allocation-convergence instances, with their ids.
pub fn allocation_suite() -> Vec<(&'static str, BanditInstance)> {
    vec![
        ("nu1", nu1()),
        ("nu2", nu2()),
        ("nu3", nu3()),
        ("nu4", nu4()),
        ("nu5", nu5()),
        ("nu6", nu6()),
    ]
}

/// Look up a preset by name.
pub fn by_name(name: &str) -> Option<BanditInstance> {
    Some(match name {
        "nu1" => nu1(),
        "nu2" => nu2(),
        "nu3" => nu3(),
        "nu4" => nu4(),
        "nu5" => nu5(),
        "nu6" => nu6(),
        "bernoulli-benchmark" => bernoulli_benchmark(),
        "gaussian-benchmark" => gaussian_benchmark(),
        _ => return None,
    })
}

pub const PRESET_NAMES: &[&str] = &[
    "nu1",
    "nu2",
    "nu3",
    "nu4",
    "nu5",
    "nu6",
    "bernoulli-benchmark",
    "gaussian-benchmark",
];
