use fpu_lindstedt::series::{Channel, Combination, ModeResponse, ResonanceKind, SourceTerm};
use fpu_lindstedt::{
    coupling, restricted_terms, rho_first_order, Lattice, LatticeConfig, ModeState, SeriesSolution, ShiftMethod,
    TermTable,
};
use proptest::prelude::*;

fn lattice(n: usize, eps: f64) -> Lattice<f64> {
    Lattice::new(LatticeConfig::new(n, eps).unwrap()).unwrap()
}

/// Random initial data for `1 ≤ N ≤ max_n` with entries in `[-amp, amp]`.
fn ics(max_n: usize, amp: f64) -> impl Strategy<Value = ModeState<f64>> {
    (1..=max_n).prop_flat_map(move |n| {
        (
            prop::collection::vec(-amp..amp, n),
            prop::collection::vec(-amp..amp, n),
        )
            .prop_map(|(q, v)| ModeState::new(q, v).unwrap())
    })
}

/// Adaptive Simpson quadrature.
fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    fn step<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    step(f, a, b, fa, fm, fb, whole, tol, 50)
}

/// Response of `ẍ + ω²x = cos|sin(α t)` from zero data via the compiled table.
fn unit_response(channel: Channel, alpha: f64, omega: f64) -> ModeResponse<f64> {
    let term = SourceTerm {
        k: 1,
        l: 1,
        m: 1,
        n: 1,
        combination: Combination::PlusMinus,
        channel,
        alpha,
        bracket: 1.0,
        prefactor: 1.0,
    };
    ModeResponse::from_table(&TermTable {
        k: 1,
        omega_k: omega,
        terms: vec![term],
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn transform_is_an_involution(x in (1usize..=32).prop_flat_map(|n| prop::collection::vec(-1.0f64..1.0, n))) {
        let lat = lattice(x.len(), 0.1);
        let back = lat.transform().apply(&lat.transform().apply(&x).unwrap()).unwrap();
        for (a, b) in x.iter().zip(&back) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn mode_site_round_trip(s in ics(32, 1.0)) {
        let lat = lattice(s.len(), 0.1);
        let back = lat.site_to_mode(&lat.mode_to_site(&s).unwrap()).unwrap();
        for (a, b) in s.q.iter().chain(&s.qdot).zip(back.q.iter().chain(&back.qdot)) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn site_and_mode_energies_agree(s in ics(16, 1.0), eps in 0.0f64..1.0) {
        let lat = lattice(s.len(), eps);
        let hm = lat.energy_mode(&s).unwrap();
        let hs = lat.energy_site(&lat.mode_to_site(&s).unwrap()).unwrap();
        prop_assert!((hm - hs).abs() < 1e-10 * hm.max(1.0), "{} vs {}", hm, hs);
    }

    #[test]
    fn eom_is_minus_potential_gradient(s in ics(4, 1.0), eps in 0.0f64..1.0) {
        let lat = lattice(s.len(), eps);
        let acc = lat.eom_rhs(&s.q).unwrap();
        let h = 1e-5;
        let potential = |q: &[f64]| lat.energy_mode(&ModeState::new(q.to_vec(), vec![0.0; q.len()]).unwrap()).unwrap();
        for k in 0..s.len() {
            let mut up = s.q.clone();
            let mut dn = s.q.clone();
            up[k] += h;
            dn[k] -= h;
            let grad = (potential(&up) - potential(&dn)) / (2.0 * h);
            prop_assert!((acc[k] + grad).abs() < 1e-6, "mode {}: {} vs {}", k + 1, acc[k], -grad);
        }
    }

    #[test]
    fn particular_solution_vanishes_at_origin(s in ics(16, 1.0), eps in 0.0f64..0.5) {
        let lat = lattice(s.len(), eps);
        let sol = SeriesSolution::new(&lat, s.clone(), ShiftMethod::FirstOrder).unwrap();
        for k in 1..=s.len() {
            let (x, v) = sol.q1_eval(k, 0.0).unwrap();
            // rounding bound for the sums evaluated at t = 0
            let r = sol.response(k).unwrap();
            let terms = r.harmonics.len() as f64 + 1.0;
            let xs = r.cos_k.abs() + r.harmonics.iter().map(|h| h.cos.abs()).sum::<f64>();
            let vs = r.omega_k * r.sin_k.abs() + r.harmonics.iter().map(|h| h.freq * h.sin.abs()).sum::<f64>();
            let ulp = f64::EPSILON * terms;
            prop_assert!(x.abs() <= ulp * xs, "mode {}: {} vs bound {}", k, x, ulp * xs);
            prop_assert!(v.abs() <= ulp * vs, "mode {}: {} vs bound {}", k, v, ulp * vs);
        }
    }

    #[test]
    fn series_reproduces_initial_data(s in ics(16, 1.0), eps in 0.0f64..0.5) {
        let lat = lattice(s.len(), eps);
        let sol = SeriesSolution::new(&lat, s.clone(), ShiftMethod::FirstOrder).unwrap();
        let s0 = sol.eval(0.0);
        for k in 0..s.len() {
            prop_assert!((s0.q[k] - s.q[k]).abs() < 1e-12);
            prop_assert!((s0.qdot[k] - s.qdot[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn excluded_terms_reconstruct_rho(s in ics(8, 1.0)) {
        let n = s.len();
        let lat = lattice(n, 0.1);
        let rho = rho_first_order(&lat, &s).unwrap().rho;
        for k in 1..=n {
            let (_, report) = restricted_terms(&lat, &s, k).unwrap();
            let w = lat.omega(k).unwrap();
            let (mut rc, mut rs) = (0.0, 0.0);
            for r in &report.exact {
                prop_assert_eq!(r.kind, ResonanceKind::Absorbed);
                let f = r.term.forcing_amplitude();
                match r.term.channel {
                    Channel::Cos => rc += f,
                    Channel::Sin => rs += f * r.term.alpha.signum(),
                }
            }
            // the absorbed forcing must equal -2 ρ_k ω_k² Q_{k,0}
            let a = s.q[k - 1];
            let b = s.qdot[k - 1] / w;
            prop_assert!((rc + 2.0 * rho[k - 1] * w * w * a).abs() < 1e-12);
            prop_assert!((rs + 2.0 * rho[k - 1] * w * w * b).abs() < 1e-12);
            if a * a + b * b > 1e-6 {
                let derived = -(rc * a + rs * b) / (2.0 * w * w * (a * a + b * b));
                prop_assert!((derived - rho[k - 1]).abs() < 1e-12, "mode {}: {} vs {}", k, derived, rho[k - 1]);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn green_identities_match_quadrature(
        omega in 0.2f64..2.0,
        alpha in 0.1f64..5.0,
        t in 0.0f64..10.0,
    ) {
        prop_assume!((alpha - omega).abs() > 0.05);
        for channel in [Channel::Cos, Channel::Sin] {
            let source = |s: f64| match channel {
                Channel::Cos => (alpha * s).cos(),
                Channel::Sin => (alpha * s).sin(),
            };
            let kernel = |s: f64| (omega * (t - s)).sin() / omega * source(s);
            let quad = simpson(&kernel, 0.0, t, 1e-13);
            let (closed, _) = unit_response(channel, alpha, omega).eval(t);
            prop_assert!((quad - closed).abs() < 1e-9, "{}: {} vs {}", channel, quad, closed);
        }
    }
}

#[test]
fn negative_alpha_sine_matches_quadrature() {
    let (omega, alpha, t) = (1.3, -2.1, 7.7);
    let kernel = |s: f64| (omega * (t - s)).sin() / omega * (alpha * s).sin();
    let quad = simpson(&kernel, 0.0, t, 1e-13);
    let (closed, _) = unit_response(Channel::Sin, alpha, omega).eval(t);
    assert!((quad - closed).abs() < 1e-9);
}

#[test]
fn coupling_is_symmetric_under_all_permutations() {
    const PERMS: [[usize; 4]; 24] = [
        [0, 1, 2, 3], [0, 1, 3, 2], [0, 2, 1, 3], [0, 2, 3, 1], [0, 3, 1, 2], [0, 3, 2, 1],
        [1, 0, 2, 3], [1, 0, 3, 2], [1, 2, 0, 3], [1, 2, 3, 0], [1, 3, 0, 2], [1, 3, 2, 0],
        [2, 0, 1, 3], [2, 0, 3, 1], [2, 1, 0, 3], [2, 1, 3, 0], [2, 3, 0, 1], [2, 3, 1, 0],
        [3, 0, 1, 2], [3, 0, 2, 1], [3, 1, 0, 2], [3, 1, 2, 0], [3, 2, 0, 1], [3, 2, 1, 0],
    ];
    for n in 1..=8 {
        for k in 1..=n {
            for l in 1..=n {
                for m in 1..=n {
                    for nn in 1..=n {
                        let idx = [k, l, m, nn];
                        let c = coupling(k, l, m, nn, n).unwrap();
                        for p in PERMS {
                            let c2 = coupling(idx[p[0]], idx[p[1]], idx[p[2]], idx[p[3]], n).unwrap();
                            assert_eq!(c, c2, "N = {n}, {idx:?} permuted by {p:?}");
                        }
                    }
                }
            }
        }
    }
}

#[test]
fn sparse_support_matches_dense_coupling() {
    for n in 1..=9 {
        let lat = lattice(n, 0.1);
        let mut dense = Vec::new();
        for k in 1..=n {
            for l in 1..=n {
                for m in 1..=n {
                    for nn in 1..=n {
                        let c = coupling(k, l, m, nn, n).unwrap();
                        if c != 0 {
                            dense.push((k, l, m, nn, c));
                        }
                    }
                }
            }
        }
        assert_eq!(lat.nonzero_couplings(), dense, "N = {n}");
    }
}
