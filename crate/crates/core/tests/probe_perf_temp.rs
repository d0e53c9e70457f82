//! Temporary timing probe; deleted before commit.

use czlab_core::geometry::SurfaceSpec;
use czlab_core::kernels::{build_kernel, KernelConfig};
use czlab_core::multiplier::MultiplierEngine;
use czlab_core::profiles::Profile;
use std::time::Instant;

#[test]
fn probe_sweep_point_costs() {
    let levels: Vec<f64> = (2..=9).map(|j| 0.5_f64.powi(j)).collect();
    for (sname, profile, kname) in [
        ("wwz-thm2", Profile::AffinePlusSquare, "harmonic-22"),
        ("wwz-thm1", Profile::WildC1, "harmonic-22"),
    ] {
        let surface = SurfaceSpec::registry(sname, Some(3), None, profile.clone()).unwrap();
        let kernel = build_kernel(&KernelConfig::named(kname, 3)).unwrap();
        let engine = MultiplierEngine::new(&surface, &kernel, None).unwrap();
        let t0 = Instant::now();
        let v = engine.eps_profile(1.0, &[0.0, 0.0, 0.0], &levels, 1e-6).unwrap();
        eprintln!("{sname}/{profile:?} gamma=1 (tables+eval): {:?}  v[7]={:.6}", t0.elapsed(), v[7].norm());
        for gamma in [1e2, 1e4, 1e6] {
            let t0 = Instant::now();
            let v = engine.eps_profile(gamma, &[0.0, 0.0, 0.0], &levels, 1e-6).unwrap();
            eprintln!("  gamma={gamma:.0e}: {:?}  v[7]={:.6}", t0.elapsed(), v[7].norm());
        }
        for ximag in [1e2, 1e4] {
            let t0 = Instant::now();
            let v = engine.eps_profile(0.0, &[ximag, 0.0, 0.0], &levels, 1e-6).unwrap();
            eprintln!("  xi={ximag:.0e}: {:?}  v[7]={:.6}", t0.elapsed(), v[7].norm());
        }
    }
}
