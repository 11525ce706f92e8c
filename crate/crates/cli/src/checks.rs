//! The exact-identity suite: normalizations, harmonicity and kernel masses.

use peelmap::layers::kernel_line_table;
use peelmap::sampler::Kernels;
use peelmap::{make_special_model, Model};
use serde::Serialize;

pub const SUITE_A: [f64; 4] = [1.6, 1.75, 2.25, 2.4];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckRow {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl CheckRow {
    fn new(name: String, value: f64, tolerance: f64) -> CheckRow {
        CheckRow {
            name,
            value,
            tolerance,
            pass: value.is_finite() && value < tolerance,
        }
    }
}

fn max_of(xs: impl IntoIterator<Item = f64>) -> f64 {
    xs.into_iter()
        .fold(0.0, |m, x| if x.is_nan() { f64::NAN } else { m.max(x) })
}

/// All identity residuals for one model.
pub fn identity_rows(a: f64) -> Vec<CheckRow> {
    let m: Model = make_special_model(a).expect("suite values are admissible");
    let k = Kernels::new(m.clone());
    let mut rows = Vec::new();
    let tag = |s: &str| format!("{s}[a={a}]");

    rows.push(CheckRow::new(
        tag("nu_total"),
        (m.nu_tail(1) + m.nu_tail_neg(1) - 1.0).abs(),
        1e-10,
    ));
    let partial: f64 = (1..=200).map(|j| m.nu_pmf(j) + m.nu_pmf(-j)).sum();
    rows.push(CheckRow::new(
        tag("nu_partial_plus_tails"),
        (partial + m.nu_tail(201) + m.nu_tail_neg(201) - 1.0).abs(),
        1e-10,
    ));
    rows.push(CheckRow::new(
        tag("harmonicity_1_64"),
        max_of(m.check_criticality(64)),
        1e-8,
    ));
    rows.push(CheckRow::new(
        tag("nu_minus_one_vs_two_kappa"),
        ((m.nu_pmf(-1) - 2.0 * m.kappa) / (2.0 * m.kappa)).abs(),
        1e-12,
    ));
    rows.push(CheckRow::new(
        tag("up_kernel_mass_1_64"),
        max_of((1..=64).map(|l| (k.up_kernel_mass(l) - 1.0).abs())),
        1e-10,
    ));
    rows.push(CheckRow::new(
        tag("down_kernel_mass_1_32"),
        max_of((1..=32).map(|l| (k.down_kernel_mass(l) - 1.0).abs())),
        1e-10,
    ));
    rows.push(CheckRow::new(
        tag("layer_kernel_mass_p40"),
        max_of(
            (1..=40i64)
                .flat_map(|p| kernel_line_table(&k, p))
                .map(|lines| (lines.iter().sum::<f64>() - 1.0).abs()),
        ),
        1e-10,
    ));
    rows.push(CheckRow::new(
        tag("h_down_difference_0_64"),
        max_of((0..=64).map(|l| ((m.h_up(l + 1) - m.h_up(l) - m.h_down(l)) / m.h_down(l)).abs())),
        1e-13,
    ));
    rows.push(CheckRow::new(
        tag("h_down_at_0_and_1"),
        (m.h_down(0) - 1.0).abs().max((m.h_down(1) - 0.5).abs()),
        1e-14,
    ));
    rows
}

pub fn identity_suite() -> Vec<CheckRow> {
    SUITE_A.iter().flat_map(|&a| identity_rows(a)).collect()
}
