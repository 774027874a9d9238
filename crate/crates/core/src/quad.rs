//! Cached Gauss-Legendre rules.

use std::sync::OnceLock;

use gauss_quad::GaussLegendre;

fn rule(slot: &'static OnceLock<GaussLegendre>, n: usize) -> &'static GaussLegendre {
    slot.get_or_init(|| GaussLegendre::new(n).expect("degree >= 2"))
}

/// 24-point rule, enough for smooth one-dimensional integrands.
pub fn gl24() -> &'static GaussLegendre {
    static R: OnceLock<GaussLegendre> = OnceLock::new();
    rule(&R, 24)
}

/// 64-point rule for the area quadratures.
pub fn gl64() -> &'static GaussLegendre {
    static R: OnceLock<GaussLegendre> = OnceLock::new();
    rule(&R, 64)
}

/// Composite rule: `panels` equal panels of the 24-point rule.
pub fn composite<F: FnMut(f64) -> f64>(a: f64, b: f64, panels: usize, mut f: F) -> f64 {
    let h = (b - a) / panels as f64;
    (0..panels)
        .map(|k| {
            let lo = a + k as f64 * h;
            gl24().integrate(lo, lo + h, &mut f)
        })
        .sum()
}
