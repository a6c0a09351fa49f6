use resolab_core::friedrichs::{find_resonance, survival_curve, FriedrichsModel};

fn grid(gamma: f64, span: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| span / gamma * (2.0 * k as f64 / (n - 1) as f64 - 1.0))
        .collect()
}

#[test]
fn decomposition_over_ten_lifetimes() {
    let m = FriedrichsModel::lorentzian(1.0, 0.1).unwrap();
    let r = find_resonance(&m, None).unwrap();
    let times = grid(r.decay_rate, 10.0, 201);
    let start = std::time::Instant::now();
    let c = survival_curve(&m, &times).unwrap();
    let res = c.decomposition_residual();
    eprintln!("residual {res:e} in {:?}", start.elapsed());
    assert!(res < 1e-6);
    let asym = (0..times.len())
        .map(|i| (c.p_exact[i] - c.p_exact[times.len() - 1 - i]).abs())
        .fold(0.0, f64::max);
    eprintln!("asymmetry {asym:e}");
    assert!(asym < 1e-10);
    let i = times
        .iter()
        .enumerate()
        .min_by(|a, b| (a.1 * r.decay_rate + 3.0).abs().total_cmp(&(b.1 * r.decay_rate + 3.0).abs()))
        .unwrap()
        .0;
    eprintln!("t={} |a_pole|={} |a_exact|={}", times[i], c.a_pole[i].norm(), c.a_exact[i].norm());
}
