//! Oracles shared by the integration tests. Nothing here calls into the
//! library's Born-rule path.

#![allow(dead_code)]

use chsh_locality::measurements::{
    random_unit_vector, MeasurementSetting, SettingTag, SettingsQuartet,
};
use num_complex::Complex64;
use rand_chacha::ChaCha8Rng;

/// `Σ r1 r2 |⟨u_r1 ⊗ v_r2|ψ⟩|²` for the singlet, with spin eigenvectors
/// written out from polar angles.
pub fn singlet_correlator_brute(n1: [f64; 3], n2: [f64; 3]) -> f64 {
    fn eigvec(n: [f64; 3], up: bool) -> [Complex64; 2] {
        let theta = n[2].clamp(-1.0, 1.0).acos();
        let phi = n[1].atan2(n[0]);
        let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
        let e = Complex64::from_polar(1.0, phi);
        if up {
            [Complex64::new(c, 0.0), e * s]
        } else {
            [Complex64::new(-s, 0.0), e * c]
        }
    }
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let psi = [0.0, h, -h, 0.0];
    let mut total = 0.0;
    for (r1, up1) in [(1.0, true), (-1.0, false)] {
        for (r2, up2) in [(1.0, true), (-1.0, false)] {
            let u = eigvec(n1, up1);
            let v = eigvec(n2, up2);
            let mut amp = Complex64::new(0.0, 0.0);
            for i in 0..2 {
                for j in 0..2 {
                    amp += (u[i] * v[j]).conj() * psi[2 * i + j];
                }
            }
            total += r1 * r2 * amp.norm_sqr();
        }
    }
    total
}

pub fn in_plane(deg: f64) -> [f64; 3] {
    let t = deg.to_radians();
    [t.sin(), 0.0, t.cos()]
}

/// Exact maximum of `|AB − Ab − aB − ab|` over the 1° coplanar grid on the
/// singlet, with the angles attaining it (`A, a, B, b`).
///
/// For fixed `(A, a)` the value is `|f(B) − g(b)|` with `f = AB − aB` and
/// `g = Ab + ab`, whose maximum over `(B, b)` is
/// `max(max f − min g, max g − min f)`.
pub fn grid_search_max() -> (f64, [usize; 4]) {
    let e: Vec<Vec<f64>> = (0..360)
        .map(|i| {
            (0..360)
                .map(|j| singlet_correlator_brute(in_plane(i as f64), in_plane(j as f64)))
                .collect()
        })
        .collect();
    let mut best = (0.0, [0; 4]);
    for a_up in 0..360 {
        for a_lo in 0..360 {
            let mut fmax = (f64::MIN, 0);
            let mut fmin = (f64::MAX, 0);
            let mut gmax = (f64::MIN, 0);
            let mut gmin = (f64::MAX, 0);
            for k in 0..360 {
                let f = e[a_up][k] - e[a_lo][k];
                let g = e[a_up][k] + e[a_lo][k];
                if f > fmax.0 {
                    fmax = (f, k);
                }
                if f < fmin.0 {
                    fmin = (f, k);
                }
                if g > gmax.0 {
                    gmax = (g, k);
                }
                if g < gmin.0 {
                    gmin = (g, k);
                }
            }
            if fmax.0 - gmin.0 > best.0 {
                best = (fmax.0 - gmin.0, [a_up, a_lo, fmax.1, gmin.1]);
            }
            if gmax.0 - fmin.0 > best.0 {
                best = (gmax.0 - fmin.0, [a_up, a_lo, fmin.1, gmax.1]);
            }
        }
    }
    best
}

pub fn random_quartet(rng: &mut ChaCha8Rng) -> SettingsQuartet {
    let mk = |tag, rng: &mut ChaCha8Rng| MeasurementSetting::new(tag, random_unit_vector(rng)).unwrap();
    SettingsQuartet::new(
        mk(SettingTag::A, rng),
        mk(SettingTag::SmallA, rng),
        mk(SettingTag::B, rng),
        mk(SettingTag::SmallB, rng),
    )
    .unwrap()
}
