use crate::system::SystemParams;

/// Γ_q = γ₂⁰ + 2 n̄ κ_m χ_qm² / (κ_m² + χ_qm²), with κ_m the magnon energy
/// decay rate.
pub fn dephasing_rate(n_m: f64, params: &SystemParams) -> f64 {
    params.gamma2_0 + added_dephasing(n_m, params.chi_qm, params.kappa_m)
}

/// Magnon-number-induced part of the dephasing rate.
pub fn added_dephasing(n_m: f64, chi: f64, kappa: f64) -> f64 {
    2.0 * n_m * kappa * chi * chi / (kappa * kappa + chi * chi)
}

/// AC Stark shift χ_qm·n_m.
pub fn stark_shift(n_m: f64, chi_qm: f64) -> f64 {
    chi_qm * n_m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::{khz, mhz, rad_to_hz};

    #[test]
    fn reference_values() {
        let p = SystemParams::reference();
        assert_eq!(dephasing_rate(0.0, &p), p.gamma2_0);
        let extra = rad_to_hz(dephasing_rate(100.0, &p) - p.gamma2_0);
        // 2·100·κχ²/(κ²+χ²)/2π evaluated by hand in Hz units.
        let (k, c) = (4.81e6f64, 67e3f64);
        let oracle = 200.0 * k * c * c / (k * k + c * c);
        assert!((extra - oracle).abs() < 1e-6 * oracle);
        assert!((extra / 1e3 - 186.6).abs() < 0.1);
        assert!((rad_to_hz(stark_shift(100.0, khz(67.0))) - 6.70e6).abs() < 1e-3);
    }

    #[test]
    fn saturates_toward_2nk() {
        let k = mhz(1.0);
        let mut last = 0.0;
        for chi in [0.1, 1.0, 10.0, 100.0, 1e4].map(|x| x * k) {
            let r = added_dephasing(1.0, chi, k);
            assert!(r > last && r < 2.0 * k);
            last = r;
        }
        assert!((last - 2.0 * k).abs() < 1e-7 * k);
    }

    #[test]
    fn stark_is_linear() {
        let chi = khz(-67.0);
        assert_eq!(stark_shift(0.0, chi), 0.0);
        let sum = stark_shift(3.0, chi) + stark_shift(5.0, chi);
        assert!((sum - stark_shift(8.0, chi)).abs() <= 4.0 * f64::EPSILON * sum.abs());
    }
}
