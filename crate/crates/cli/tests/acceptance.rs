//! Acceptance suite. Prints one PASS/FAIL line per criterion (indented
//! detail lines follow where useful) and exits non-zero if any failed.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::process::Command;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use thzsim::atmosphere::{absorption_coefficient, AtmosphericConditions};
use thzsim::channel::{
    db_to_linear, misalignment_gain, sample_pointing_error, DeterministicGains, LinkConfig,
};
use thzsim::experiments::{run_sweep, snr_gap_at_ser, Method, SweepRow, SweepSpec};
use thzsim::montecarlo::{run_mc, McConfig, McMode};
use thzsim::ser::{
    avg_ser_closed, avg_ser_quadrature_params, instantaneous_ser, ModulationScheme, QMode,
    SerParams,
};
use thzsim::special::q_function;
use thzsim::stats::{ks_critical_value, ks_statistic, RunningMoments};

const DISTANCES: [f64; 3] = [30.0, 50.0, 80.0];
const JITTERS: [f64; 3] = [0.01, 0.025, 0.05];

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    pass: bool,
    summary: String,
    details: Vec<String>,
}

fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| (lo.ln() + (hi / lo).ln() * i as f64 / (n - 1) as f64).exp())
        .collect()
}

fn curve(rows: &[SweepRow], s: ModulationScheme, m: Method, d: f64, j: f64) -> Vec<SweepRow> {
    rows.iter()
        .filter(|r| r.scheme == s && r.method == m && r.distance_m == d && r.jitter == j)
        .cloned()
        .collect()
}

/// Closed forms against Chernoff-integrand quadrature on a 20 x 12 (A, B) grid.
fn closed_form_equivalence() -> Outcome {
    let a_grid = log_grid(1e-2, 1e6, 20);
    let b_grid = log_grid(0.5, 500.0, 12);
    let mut worst = (0.0f64, String::new());
    let mut failures = 0usize;
    let mut points = 0usize;
    for s in ModulationScheme::ALL {
        for &a in &a_grid {
            for &b in &b_grid {
                points += 1;
                let p = SerParams::new(a, b).unwrap();
                let rel = match (
                    avg_ser_closed(s, &p),
                    avg_ser_quadrature_params(s, &p, QMode::Chernoff),
                ) {
                    (Ok(c), Ok(q)) => (c.ln_value - q.ln_value).exp_m1().abs(),
                    _ => f64::INFINITY,
                };
                if !(rel <= 1e-8) {
                    failures += 1;
                }
                if !(rel <= worst.0) {
                    worst = (rel, format!("{s} A={a:.3e} B={b:.3e}"));
                }
            }
        }
    }
    Outcome {
        pass: failures == 0,
        summary: format!(
            "{points} (A, B, scheme) points, max relative deviation {:.2e} at {} (tolerance 1e-8)",
            worst.0, worst.1
        ),
        details: vec![],
    }
}

/// Horizontal gap between closed form and semi-analytic MC, 10^6 draws/point.
fn paper_mismatch_claim() -> Outcome {
    let spec = SweepSpec {
        snr_grid: (0..=100).map(f64::from).collect(),
        distances: DISTANCES.to_vec(),
        jitter_values: JITTERS.to_vec(),
        schemes: ModulationScheme::ALL.to_vec(),
        methods: vec![Method::ClosedForm, Method::QuadratureExact, Method::McSemi],
        mc: McConfig {
            mode: McMode::SemiAnalytic,
            num_trials: 1_000_000,
            ..McConfig::default()
        },
        ..SweepSpec::default()
    };
    let rows = run_sweep(&spec).expect("sweep");
    // half-decade SER levels from 1e-1 down to 1e-5
    let levels: Vec<f64> = (0..=8).map(|k| 10f64.powf(-1.0 - 0.5 * k as f64)).collect();
    let mut details = Vec::new();
    let mut over = 0usize;
    let mut non_monotone = 0usize;
    let mut max_gap = 0.0f64;
    for s in ModulationScheme::ALL {
        for d in DISTANCES {
            for j in JITTERS {
                let closed = curve(&rows, s, Method::ClosedForm, d, j);
                let mc = curve(&rows, s, Method::McSemi, d, j);
                let exact = curve(&rows, s, Method::QuadratureExact, d, j);
                // noise-free reference: the same gap against the exact average
                let model_gap = levels
                    .iter()
                    .map(|&t| snr_gap_at_ser(&closed, &exact, t).unwrap_or(f64::INFINITY))
                    .fold(0.0, f64::max);
                let gaps: Vec<f64> = levels
                    .iter()
                    .map(|&t| snr_gap_at_ser(&closed, &mc, t).unwrap_or(f64::INFINITY))
                    .collect();
                let worst = gaps.iter().copied().fold(0.0, f64::max);
                max_gap = max_gap.max(worst);
                let bad_levels = gaps.iter().filter(|&&g| !(g <= 2.5)).count();
                over += usize::from(bad_levels > 0);
                // allow 0.05 dB of MC wobble between neighbouring levels
                let monotone = gaps.windows(2).all(|w| w[1] <= w[0] + 0.05);
                non_monotone += usize::from(!monotone);
                details.push(format!(
                    "{s} d={d:>2} jitter={j:<5} B={:.3} gap dB @1e-1..1e-5: {} (max vs exact average {model_gap:.2}) {}{}",
                    closed[0].b_param,
                    gaps.iter().map(|g| format!("{g:.2}")).collect::<Vec<_>>().join(" "),
                    if bad_levels > 0 { format!("[{bad_levels} levels > 2.5]") } else { String::new() },
                    if monotone { "" } else { " [not shrinking]" },
                ));
            }
        }
    }
    Outcome {
        pass: over == 0 && non_monotone == 0,
        summary: format!(
            "max gap {max_gap:.2} dB (tolerance 2.5 dB); {over}/18 curves exceed it at some level, {non_monotone}/18 not shrinking toward high SNR"
        ),
        details,
    }
}

/// Closed form never below the exact-Q average.
fn chernoff_ordering() -> Outcome {
    let spec = SweepSpec {
        snr_grid: (0..=50).map(|i| 2.0 * i as f64).collect(),
        distances: DISTANCES.to_vec(),
        jitter_values: JITTERS.to_vec(),
        schemes: ModulationScheme::ALL.to_vec(),
        methods: vec![Method::ClosedForm, Method::QuadratureExact],
        ..SweepSpec::default()
    };
    let rows = run_sweep(&spec).expect("sweep");
    let mut violations = 0usize;
    let mut errors = 0usize;
    let mut points = 0usize;
    for s in ModulationScheme::ALL {
        for d in DISTANCES {
            for j in JITTERS {
                let closed = curve(&rows, s, Method::ClosedForm, d, j);
                let exact = curve(&rows, s, Method::QuadratureExact, d, j);
                for (c, e) in closed.iter().zip(&exact) {
                    points += 1;
                    if c.is_error() || e.is_error() {
                        errors += 1;
                    } else if !(c.ser >= e.ser) {
                        violations += 1;
                    }
                }
            }
        }
    }
    Outcome {
        pass: violations == 0 && errors == 0,
        summary: format!("{points} sweep points (SNR 0-100 dB), {violations} violations, {errors} evaluation errors"),
        details: vec![],
    }
}

/// KS test and mean check for sampled misalignment gains.
fn stochastic_model_identity() -> Outcome {
    const N: usize = 100_000;
    let mut pass = true;
    let mut details = Vec::new();
    let crit = ks_critical_value(N, 0.01);
    for (i, j) in JITTERS.into_iter().enumerate() {
        let model = LinkConfig {
            jitter_value: j,
            ..LinkConfig::default()
        }
        .misalignment()
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7_000 + i as u64);
        let mut samples: Vec<f64> = (0..N)
            .map(|_| {
                misalignment_gain(sample_pointing_error(&mut rng, model.sigma_r), &model).unwrap()
            })
            .collect();
        let mut moments = RunningMoments::default();
        samples.iter().for_each(|&x| moments.push(x));
        let expected = model.mean_gain();
        let z = (moments.mean - expected) / moments.std_error();
        let d = ks_statistic(&mut samples, |x| model.cdf(x));
        let ok = d < crit && z.abs() <= 3.0;
        pass &= ok;
        details.push(format!(
            "jitter={j}: KS D={d:.5} (critical {crit:.5}), mean {:.6e} vs {expected:.6e} ({z:+.2} SE)",
            moments.mean
        ));
    }
    Outcome {
        pass,
        summary: format!("{N} samples per jitter setting, KS at 1% and mean within 3 SE"),
        details,
    }
}

/// Peaks of the two water-vapour line terms on a 10 MHz grid.
fn absorption_line_placement() -> Outcome {
    let c = AtmosphericConditions::standard();
    let grid: Vec<f64> = (0..=25_000).map(|i| 200e9 + i as f64 * 10e6).collect();
    let argmax = |term: fn(&thzsim::atmosphere::AbsorptionBreakdown) -> f64| {
        grid.iter()
            .copied()
            .max_by(|&a, &b| {
                let ta = term(&absorption_coefficient(a, &c).unwrap());
                let tb = term(&absorption_coefficient(b, &c).unwrap());
                ta.total_cmp(&tb)
            })
            .unwrap()
    };
    let p1 = argmax(|b| b.y1_term);
    let p2 = argmax(|b| b.y2_term);
    let pass = (p1 - 324.8e9).abs() <= 1e9 && (p2 - 379.7e9).abs() <= 1e9;
    Outcome {
        pass,
        summary: format!(
            "peaks at {:.2} GHz and {:.2} GHz (targets 324.8 / 379.7 GHz, tolerance 1 GHz)",
            p1 / 1e9,
            p2 / 1e9
        ),
        details: vec![],
    }
}

/// Symbol-level MC through a fixed channel against the AWGN SER.
fn awgn_sanity() -> Outcome {
    const N: u64 = 10_000_000;
    let gains = DeterministicGains::new(1.0, 1.0);
    let model = LinkConfig::default()
        .misalignment()
        .unwrap()
        .with_sigma_r(0.0);
    let mut pass = true;
    let mut details = Vec::new();
    for s in ModulationScheme::ALL {
        for snr_db in [0.0, 5.0, 10.0] {
            let snr = db_to_linear(snr_db);
            let theory = match s {
                ModulationScheme::Bpsk => q_function((2.0 * snr).sqrt()),
                ModulationScheme::Qpsk => 1.0 - (1.0 - q_function(snr.sqrt())).powi(2),
            };
            debug_assert!((theory - instantaneous_ser(s, snr)).abs() < 1e-15);
            // the fixed channel still applies A0, so scale the average SNR to hit `snr`
            let avg_snr = snr / (model.a0 * model.a0);
            let cfg = McConfig {
                mode: McMode::SymbolLevel,
                num_trials: N,
                seed: 31,
                ..McConfig::default()
            };
            let est = run_mc(&cfg, s, avg_snr, &gains, &model).unwrap();
            let sigma = (theory * (1.0 - theory) / N as f64).sqrt();
            let k = (est.ser - theory) / sigma;
            pass &= k.abs() <= 3.0;
            details.push(format!(
                "{s} {snr_db:>4} dB: {:.6e} vs {theory:.6e} ({k:+.2} sigma)",
                est.ser
            ));
        }
    }
    Outcome {
        pass,
        summary: format!("{N} symbols per point, sigma_r = 0, tolerance 3 binomial sigma"),
        details,
    }
}

/// CLI sweep output is byte-identical across runs and worker counts.
fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let run = |threads: &str, name: &str| {
        let out = dir.path().join(name);
        let status = Command::new(env!("CARGO_BIN_EXE_thzsim"))
            .args([
                "sweep",
                "--methods",
                "closed_form,quadrature_exact,mc_semi,mc_symbol",
            ])
            .args([
                "--snr-max",
                "30",
                "--trials",
                "100000",
                "--seed",
                "17",
                "--out",
            ])
            .arg(&out)
            .env("THZSIM_THREADS", threads)
            .stderr(std::process::Stdio::null())
            .status()
            .expect("spawn thzsim");
        assert!(status.success(), "sweep failed");
        std::fs::read(&out).unwrap()
    };
    let first = run("1", "a.csv");
    let second = run("1", "b.csv");
    let eight = run("8", "c.csv");
    let pass = first == second && first == eight;
    Outcome {
        pass,
        summary: format!(
            "SNR 0-30 dB, 3 distances, 3 jitters, 4 methods, {} bytes; repeat identical: {}, 1 vs 8 workers identical: {}",
            first.len(),
            first == second,
            first == eight
        ),
        details: vec![],
    }
}

fn main() {
    let criteria: [Criterion; 7] = [
        ("closed-form/oracle equivalence", closed_form_equivalence),
        ("closed form vs simulation gap", paper_mismatch_claim),
        ("Chernoff ordering", chernoff_ordering),
        ("stochastic-model identity", stochastic_model_identity),
        ("absorption line placement", absorption_line_placement),
        ("AWGN sanity", awgn_sanity),
        ("determinism", determinism),
    ];
    let filter: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let o = check();
        let secs = start.elapsed().as_secs_f64();
        println!(
            "{} criterion {}: {name}: {} [{secs:.1} s]",
            if o.pass { "PASS" } else { "FAIL" },
            i + 1,
            o.summary
        );
        for d in &o.details {
            println!("    {d}");
        }
        failed += usize::from(!o.pass);
    }
    if failed > 0 {
        println!("acceptance: {failed} criteria failed");
        std::process::exit(1);
    }
    println!("acceptance: all criteria passed");
}
