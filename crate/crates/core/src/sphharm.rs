//! Real spherical harmonics `Y_{l,m}`, orthonormal on the unit sphere.
//!
//! Conventions: for `m > 0` the harmonic carries `cos(m phi)`, for `m < 0`
//! it carries `sin(|m| phi)`, and `int_{S^2} Y_{l,m}^2 dsigma = 1`.

use core::f64::consts::PI;

/// Evaluate the real spherical harmonic `Y_{l,m}` at a unit direction.
///
/// `dir` need not be exactly normalized; it is projected onto the sphere.
/// Panics if `|m| > l`.
pub fn real_sph_harm(l: u32, m: i32, dir: [f64; 3]) -> f64 {
    assert!(m.unsigned_abs() <= l, "|m| must not exceed l");
    let norm = libm::sqrt(dir[0] * dir[0] + dir[1] * dir[1] + dir[2] * dir[2]);
    debug_assert!(norm > 0.0);
    let ct = dir[2] / norm;
    let am = m.unsigned_abs();
    let p = normalized_assoc_legendre(l, am, ct);
    if m == 0 {
        p
    } else {
        let phi = libm::atan2(dir[1], dir[0]);
        let sqrt2 = core::f64::consts::SQRT_2;
        if m > 0 {
            sqrt2 * p * libm::cos(am as f64 * phi)
        } else {
            sqrt2 * p * libm::sin(am as f64 * phi)
        }
    }
}

/// Fully normalized associated Legendre function
/// `N_{l,m} P_l^m(x)` with `N_{l,m} = sqrt((2l+1)/(4 pi) (l-m)!/(l+m)!)`,
/// computed with the standard stable upward recurrence in `l`.
fn normalized_assoc_legendre(l: u32, m: u32, x: f64) -> f64 {
    let sx = libm::sqrt((1.0 - x * x).max(0.0));
    // P_mm with normalization built in.
    let mut pmm = libm::sqrt(1.0 / (4.0 * PI));
    for k in 1..=m {
        let k = k as f64;
        pmm *= libm::sqrt((2.0 * k + 1.0) / (2.0 * k)) * sx;
    }
    if l == m {
        return pmm;
    }
    let mf = m as f64;
    let mut pm1 = pmm; // P_{m,m}
    let mut p = libm::sqrt(2.0 * mf + 3.0) * x * pmm; // P_{m+1,m}
    for ll in (m + 2)..=l {
        let lf = ll as f64;
        let a = libm::sqrt((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf));
        let b = libm::sqrt(((lf - 1.0) * (lf - 1.0) - mf * mf) / (4.0 * (lf - 1.0) * (lf - 1.0) - 1.0));
        let next = a * (x * p - b * pm1);
        pm1 = p;
        p = next;
    }
    p
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::AngularGrid;

    #[test]
    fn low_order_closed_forms() {
        let d = [0.3f64, -0.4, 0.866_025_403_784_438_6];
        let n = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
        let u = [d[0] / n, d[1] / n, d[2] / n];
        let y00 = real_sph_harm(0, 0, u);
        assert!((y00 - 0.5 / PI.sqrt()).abs() < 1e-14);
        let y10 = real_sph_harm(1, 0, u);
        assert!((y10 - (3.0 / (4.0 * PI)).sqrt() * u[2]).abs() < 1e-13);
        let y20 = real_sph_harm(2, 0, u);
        let expect = (5.0 / (16.0 * PI)).sqrt() * (3.0 * u[2] * u[2] - 1.0);
        assert!((y20 - expect).abs() < 1e-13);
        let y11 = real_sph_harm(1, 1, u);
        assert!((y11 - (3.0 / (4.0 * PI)).sqrt() * u[0]).abs() < 1e-13);
        let y1m1 = real_sph_harm(1, -1, u);
        assert!((y1m1 - (3.0 / (4.0 * PI)).sqrt() * u[1]).abs() < 1e-13);
    }

    #[test]
    fn orthonormal_on_angular_grid() {
        let grid = AngularGrid::default_grid();
        let modes: Vec<(u32, i32)> = (0..=4u32)
            .flat_map(|l| (-(l as i32)..=l as i32).map(move |m| (l, m)))
            .collect();
        for (i, &(l1, m1)) in modes.iter().enumerate() {
            for &(l2, m2) in &modes[i..] {
                let ip = grid
                    .integrate(|d| real_sph_harm(l1, m1, d) * real_sph_harm(l2, m2, d));
                let expect = if (l1, m1) == (l2, m2) { 1.0 } else { 0.0 };
                assert!(
                    (ip - expect).abs() < 1e-10,
                    "({l1},{m1})x({l2},{m2}) -> {ip}"
                );
            }
        }
    }
}
