use nonlocal_constants::constants::{compute_f, k2_space_unchecked};
use nonlocal_constants::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x34);
    let cfg = IntegratorConfig::default();
    let rho = RhoParams::pais_uhlenbeck(1.0, 2.0);
    let spec1 = make_pais_uhlenbeck(1.0, 2.0, 1).unwrap();
    let mut init = vec![];
    for _ in 0..7 { init = (0..4).map(|_| vec![rng.gen_range(-1.0..1.0)]).collect(); }
    let (q0, q1, q2, q3) = (init[0][0], init[1][0], init[2][0], init[3][0]);
    let a = (4.0 * q0 + q2) / 3.0;
    let c = -(q0 + q2) / 3.0;
    let b = (4.0 * q1 + q3) / 3.0;
    let d = -(q1 + q3) / 6.0;
    let qm = |t: f64, m: i32| -> f64 {
        let (s1, c1) = t.sin_cos();
        let (s2, c2) = (2.0 * t).sin_cos();
        let w2 = 2.0_f64.powi(m);
        match m.rem_euclid(4) {
            0 => a * c1 + b * s1 + w2 * (c * c2 + d * s2),
            1 => -a * s1 + b * c1 + w2 * (-c * s2 + d * c2),
            2 => -a * c1 - b * s1 + w2 * (-c * c2 - d * s2),
            _ => a * s1 - b * c1 + w2 * (c * s2 - d * c2),
        }
    };
    let traj = integrate(&spec1, &JetState::new(0.0, init).unwrap(), 50.0, &cfg).unwrap();
    let t = 22.754545454545458;
    let f0 = compute_f(&spec1, &traj, t, 0).unwrap()[0];
    println!("F0 err: {:.3e}", (f0 - (-5.0 * qm(t, 1) - qm(t, 3))).abs());
    for ell in 1..=4 {
        let f = compute_f(&spec1, &traj, t, ell).unwrap()[0];
        println!("F{ell} err: {:.3e}  (F{ell} = {:.3})", (f - 4.0 * qm(t, ell as i32 - 1)).abs(), f);
    }
    let st = traj.sample_jets(t).unwrap();
    let k2g = k2_space_unchecked(&spec1, &rho, &traj, t).unwrap();
    let k2o = pu_k2(&st, 1.0, 2.0).unwrap();
    println!("k2 generic - oracle: {:.3e}", (k2g - k2o).abs());
}
