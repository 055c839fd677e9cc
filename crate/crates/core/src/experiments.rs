//! Parameter sweeps, theory-vs-simulation gap measurement, validity checks.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{db_to_linear, deterministic_gains, LinkConfig};
use crate::error::{domain, Error, Result};
use crate::montecarlo::{mix_seed, run_mc, McConfig, McMode};
use crate::ser::{avg_ser_closed, avg_ser_quadrature, ser_params, ModulationScheme, QMode};

/// SER below which symbol-level Monte Carlo is not attempted.
pub const MC_SYMBOL_MIN_SER: f64 = 1e-6;
/// Symbol-level budgets are raised until this many errors are expected.
pub const MC_SYMBOL_TARGET_ERRORS: f64 = 100.0;
pub const MC_INFEASIBLE_NOTE: &str = "MC-infeasible at desk scale";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ClosedForm,
    QuadratureExact,
    McSymbol,
    McSemi,
}

impl Method {
    pub const ALL: [Method; 4] = [
        Method::ClosedForm,
        Method::QuadratureExact,
        Method::McSymbol,
        Method::McSemi,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::ClosedForm => "closed_form",
            Method::QuadratureExact => "quadrature_exact",
            Method::McSymbol => "mc_symbol",
            Method::McSemi => "mc_semi",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| {
                format!("unknown method `{s}` (expected closed_form, quadrature_exact, mc_symbol or mc_semi)")
            })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    /// Average SNR values in dB, strictly increasing.
    pub snr_grid: Vec<f64>,
    /// Distances in m.
    pub distances: Vec<f64>,
    /// Jitter values, read with `base.jitter_interpretation`.
    pub jitter_values: Vec<f64>,
    pub schemes: Vec<ModulationScheme>,
    pub methods: Vec<Method>,
    pub base: LinkConfig,
    pub mc: McConfig,
}

impl Default for SweepSpec {
    /// SNR 0-60 dB in 2 dB steps, d ∈ {30, 50, 80} m, jitter ∈ {0.01, 0.025, 0.05},
    /// both schemes, closed form + exact quadrature + semi-analytic MC.
    fn default() -> Self {
        Self {
            snr_grid: (0..=30).map(|i| 2.0 * i as f64).collect(),
            distances: vec![30.0, 50.0, 80.0],
            jitter_values: vec![0.01, 0.025, 0.05],
            schemes: ModulationScheme::ALL.to_vec(),
            methods: vec![Method::ClosedForm, Method::QuadratureExact, Method::McSemi],
            base: LinkConfig::default(),
            mc: McConfig::default(),
        }
    }
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        const OP: &str = "SweepSpec";
        for (name, empty) in [
            ("snr_grid", self.snr_grid.is_empty()),
            ("distances", self.distances.is_empty()),
            ("jitter_values", self.jitter_values.is_empty()),
            ("schemes", self.schemes.is_empty()),
            ("methods", self.methods.is_empty()),
        ] {
            if empty {
                return domain(OP, format!("{name} must not be empty"));
            }
        }
        if self.snr_grid.iter().any(|v| !v.is_finite()) {
            return domain(OP, "snr_grid values must be finite");
        }
        if self.snr_grid.windows(2).any(|w| w[1] <= w[0]) {
            return domain(OP, "snr_grid must be strictly increasing");
        }
        for &d in &self.distances {
            LinkConfig {
                distance: d,
                ..self.base
            }
            .validate()?;
        }
        for &j in &self.jitter_values {
            LinkConfig {
                jitter_value: j,
                ..self.base
            }
            .validate()?;
        }
        self.mc.validate()
    }

    /// Number of rows `run_sweep` will produce.
    pub fn row_count(&self) -> usize {
        self.snr_grid.len()
            * self.distances.len()
            * self.jitter_values.len()
            * self.schemes.len()
            * self.methods.len()
    }
}

/// One evaluated point of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub scheme: ModulationScheme,
    pub method: Method,
    pub snr_db: f64,
    pub distance_m: f64,
    pub jitter: f64,
    /// NaN when the row could not be evaluated; see `note`.
    pub ser: f64,
    pub half_width: f64,
    pub a_param: f64,
    pub b_param: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl SweepRow {
    /// True when the row carries an evaluation failure rather than a value
    /// or an infeasibility marker.
    pub fn is_error(&self) -> bool {
        self.ser.is_nan()
            && self
                .note
                .as_deref()
                .is_some_and(|n| n != MC_INFEASIBLE_NOTE)
    }
}

#[derive(Debug, Clone, Copy)]
struct Task {
    scheme: ModulationScheme,
    method: Method,
    d_idx: usize,
    j_idx: usize,
    snr_idx: usize,
}

/// Evaluate the full grid. Rows are ordered by scheme, method, distance,
/// jitter and SNR (in the order given in `spec`); per-row failures are
/// recorded in the row.
///
/// Monte Carlo rows of one curve share a seed derived from the sweep seed and
/// the curve's position, so the channel draws are common across SNR points.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    spec.validate()?;
    let mut tasks = Vec::with_capacity(spec.row_count());
    for &scheme in &spec.schemes {
        for &method in &spec.methods {
            for d_idx in 0..spec.distances.len() {
                for j_idx in 0..spec.jitter_values.len() {
                    for snr_idx in 0..spec.snr_grid.len() {
                        tasks.push(Task {
                            scheme,
                            method,
                            d_idx,
                            j_idx,
                            snr_idx,
                        });
                    }
                }
            }
        }
    }
    Ok(tasks.par_iter().map(|t| evaluate(spec, t)).collect())
}

fn curve_seed(spec: &SweepSpec, t: &Task) -> u64 {
    let curve = ((t.scheme as u64) << 48)
        | ((t.method as u64) << 40)
        | ((t.d_idx as u64) << 20)
        | t.j_idx as u64;
    mix_seed(spec.mc.seed, curve)
}

fn evaluate(spec: &SweepSpec, t: &Task) -> SweepRow {
    let distance = spec.distances[t.d_idx];
    let jitter = spec.jitter_values[t.j_idx];
    let snr_db = spec.snr_grid[t.snr_idx];
    let mut row = SweepRow {
        scheme: t.scheme,
        method: t.method,
        snr_db,
        distance_m: distance,
        jitter,
        ser: f64::NAN,
        half_width: 0.0,
        a_param: f64::NAN,
        b_param: f64::NAN,
        note: None,
    };
    if let Err(e) = fill_row(spec, t, &mut row) {
        row.ser = f64::NAN;
        row.note = Some(e.to_string());
    }
    row
}

fn fill_row(spec: &SweepSpec, t: &Task, row: &mut SweepRow) -> Result<()> {
    let link = LinkConfig {
        distance: row.distance_m,
        jitter_value: row.jitter,
        ..spec.base
    };
    let gains = deterministic_gains(&link)?;
    let model = link.misalignment()?;
    let avg_snr = db_to_linear(row.snr_db);
    let params = ser_params(avg_snr, &gains, &model);
    row.a_param = params.a_param;
    row.b_param = params.b_param;

    match t.method {
        Method::ClosedForm => {
            row.ser = avg_ser_closed(t.scheme, &params)?.value;
        }
        Method::QuadratureExact => {
            row.ser = avg_ser_quadrature(t.scheme, avg_snr, &gains, &model, QMode::Exact)?.value;
        }
        Method::McSemi => {
            let cfg = McConfig {
                mode: McMode::SemiAnalytic,
                seed: curve_seed(spec, t),
                ..spec.mc
            };
            let est = run_mc(&cfg, t.scheme, avg_snr, &gains, &model)?;
            row.ser = est.ser;
            row.half_width = est.half_width;
        }
        Method::McSymbol => {
            let predicted = avg_ser_closed(t.scheme, &params)?.value;
            if predicted < MC_SYMBOL_MIN_SER {
                row.note = Some(MC_INFEASIBLE_NOTE.to_string());
                return Ok(());
            }
            let needed = (MC_SYMBOL_TARGET_ERRORS / predicted).ceil() as u64;
            let cfg = McConfig {
                mode: McMode::SymbolLevel,
                seed: curve_seed(spec, t),
                num_trials: spec.mc.num_trials.max(needed),
                ..spec.mc
            };
            let est = run_mc(&cfg, t.scheme, avg_snr, &gains, &model)?;
            row.ser = est.ser;
            row.half_width = est.half_width;
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Gap metric
// ---------------------------------------------------------------------------

/// SNR (dB) at which a nonincreasing SER curve crosses `target_ser`, by
/// linear interpolation of `log10(SER)` against SNR. Points with
/// non-positive or non-finite SER are ignored. `None` if the curve does not
/// bracket the target.
pub fn snr_at_ser(points: &[(f64, f64)], target_ser: f64) -> Option<f64> {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .copied()
        .filter(|&(s, p)| s.is_finite() && p.is_finite() && p > 0.0)
        .collect();
    let lt = target_ser.log10();
    pts.windows(2).find_map(|w| {
        let (s0, p0) = w[0];
        let (s1, p1) = w[1];
        if p0 >= target_ser && target_ser >= p1 {
            let (l0, l1) = (p0.log10(), p1.log10());
            if l0 == l1 {
                return Some(s0);
            }
            Some(s0 + (lt - l0) / (l1 - l0) * (s1 - s0))
        } else {
            None
        }
    })
}

fn curve_points(rows: &[SweepRow]) -> Result<Vec<(f64, f64)>> {
    let mut pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.ser.is_finite())
        .map(|r| (r.snr_db, r.ser))
        .collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    if pts.windows(2).any(|w| w[1].1 > w[0].1) {
        return Err(Error::Domain {
            op: "snr_gap_at_ser",
            msg: "curve is not monotone nonincreasing in SNR".into(),
        });
    }
    Ok(pts)
}

/// Horizontal distance in dB between two SER-vs-SNR curves at `target_ser`.
pub fn snr_gap_at_ser(curve_a: &[SweepRow], curve_b: &[SweepRow], target_ser: f64) -> Result<f64> {
    let a = curve_points(curve_a)?;
    let b = curve_points(curve_b)?;
    match (snr_at_ser(&a, target_ser), snr_at_ser(&b, target_ser)) {
        (Some(sa), Some(sb)) => Ok((sa - sb).abs()),
        _ => domain(
            "snr_gap_at_ser",
            format!("curves do not both bracket SER {target_ser:e}; incomparable"),
        ),
    }
}

// ---------------------------------------------------------------------------
// Validity range
// ---------------------------------------------------------------------------

pub const MAX_VALID_DISTANCE_M: f64 = 100.0;
pub const MAX_VALID_JITTER_VARIANCE: f64 = 0.05;
pub const BEAM_RATIO_RANGE: (f64, f64) = (6.0, 10.0);
pub const ABSORPTION_WINDOW_HZ: (f64, f64) = (200e9, 400e9);

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ValidityWarning {
    Distance { distance_m: f64 },
    JitterVariance { variance_m2: f64 },
    BeamRatio { ratio: f64 },
    Frequency { frequency_hz: f64 },
}

impl std::fmt::Display for ValidityWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ValidityWarning::Distance { distance_m } => write!(
                f,
                "distance {distance_m} m exceeds the {MAX_VALID_DISTANCE_M} m validity range of the closed forms"
            ),
            ValidityWarning::JitterVariance { variance_m2 } => write!(
                f,
                "jitter variance {variance_m2} m^2 exceeds {MAX_VALID_JITTER_VARIANCE} m^2"
            ),
            ValidityWarning::BeamRatio { ratio } => write!(
                f,
                "beam_waist/aperture_radius = {ratio} lies outside [{}, {}]",
                BEAM_RATIO_RANGE.0, BEAM_RATIO_RANGE.1
            ),
            ValidityWarning::Frequency { frequency_hz } => write!(
                f,
                "frequency {frequency_hz} Hz lies outside the {}-{} GHz absorption-model window",
                ABSORPTION_WINDOW_HZ.0 / 1e9,
                ABSORPTION_WINDOW_HZ.1 / 1e9
            ),
        }
    }
}

/// Flag parameters outside the range where the closed forms are known to
/// track simulation. Never fails.
pub fn validity_check(config: &LinkConfig) -> Vec<ValidityWarning> {
    let mut out = Vec::new();
    if config.distance > MAX_VALID_DISTANCE_M {
        out.push(ValidityWarning::Distance {
            distance_m: config.distance,
        });
    }
    let variance = config.sigma_r().powi(2);
    if variance > MAX_VALID_JITTER_VARIANCE * (1.0 + 1e-12) {
        out.push(ValidityWarning::JitterVariance {
            variance_m2: variance,
        });
    }
    let ratio = config.beam_waist / config.aperture_radius;
    // 0.6 / 0.1 is 5.999..., so the edges get a little relative slack
    let slack = 1e-9;
    if ratio < BEAM_RATIO_RANGE.0 * (1.0 - slack) || ratio > BEAM_RATIO_RANGE.1 * (1.0 + slack) {
        out.push(ValidityWarning::BeamRatio { ratio });
    }
    if !(ABSORPTION_WINDOW_HZ.0..=ABSORPTION_WINDOW_HZ.1).contains(&config.frequency) {
        out.push(ValidityWarning::Frequency {
            frequency_hz: config.frequency,
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_spec() -> SweepSpec {
        SweepSpec {
            snr_grid: (0..=20).map(|i| 3.0 * i as f64).collect(),
            distances: vec![30.0, 50.0, 80.0],
            jitter_values: vec![0.01],
            schemes: ModulationScheme::ALL.to_vec(),
            methods: vec![Method::ClosedForm, Method::QuadratureExact],
            ..SweepSpec::default()
        }
    }

    fn curve(
        rows: &[SweepRow],
        scheme: ModulationScheme,
        method: Method,
        d: f64,
        j: f64,
    ) -> Vec<SweepRow> {
        rows.iter()
            .filter(|r| {
                r.scheme == scheme && r.method == method && r.distance_m == d && r.jitter == j
            })
            .cloned()
            .collect()
    }

    #[test]
    fn row_count_and_order() {
        let spec = small_spec();
        let rows = run_sweep(&spec).unwrap();
        assert_eq!(rows.len(), 252);
        assert_eq!(rows.len(), spec.row_count());
        assert_eq!(rows[0].scheme, ModulationScheme::Bpsk);
        assert_eq!(rows[0].method, Method::ClosedForm);
        assert_eq!(rows[0].distance_m, 30.0);
        assert_eq!(rows[20].snr_db, 60.0);
        assert_eq!(rows[21].distance_m, 50.0);
        assert_eq!(rows[63].method, Method::QuadratureExact);
        assert_eq!(rows[126].scheme, ModulationScheme::Qpsk);
        assert!(rows
            .iter()
            .all(|r| (0.0..=1.0).contains(&r.ser) && r.half_width == 0.0));
    }

    #[test]
    fn closed_form_rows_delegate() {
        let spec = small_spec();
        let rows = run_sweep(&spec).unwrap();
        let link = LinkConfig::default();
        let g = deterministic_gains(&link).unwrap();
        let m = link.misalignment().unwrap();
        for r in curve(
            &rows,
            ModulationScheme::Bpsk,
            Method::ClosedForm,
            50.0,
            0.01,
        ) {
            let p = ser_params(db_to_linear(r.snr_db), &g, &m);
            assert_eq!(r.ser, crate::ser::avg_ser_bpsk_closed(&p).unwrap().value);
            assert_eq!(r.a_param, p.a_param);
        }
    }

    #[test]
    fn sweep_orderings() {
        let spec = SweepSpec {
            jitter_values: vec![0.01, 0.025, 0.05],
            methods: vec![Method::ClosedForm],
            ..small_spec()
        };
        let rows = run_sweep(&spec).unwrap();
        for s in ModulationScheme::ALL {
            for &d in &spec.distances {
                for &j in &spec.jitter_values {
                    let c = curve(&rows, s, Method::ClosedForm, d, j);
                    assert!(c.windows(2).all(|w| w[1].ser <= w[0].ser));
                }
            }
            for (k, &snr) in spec.snr_grid.iter().enumerate() {
                let at = |d: f64, j: f64| curve(&rows, s, Method::ClosedForm, d, j)[k].ser;
                assert!(at(30.0, 0.01) <= at(50.0, 0.01), "{snr}");
                assert!(at(50.0, 0.01) <= at(80.0, 0.01), "{snr}");
                assert!(at(50.0, 0.01) <= at(50.0, 0.025), "{snr}");
                assert!(at(50.0, 0.025) <= at(50.0, 0.05), "{snr}");
            }
        }
    }

    #[test]
    fn mc_symbol_rows_are_marked_when_infeasible() {
        let spec = SweepSpec {
            snr_grid: vec![20.0, 80.0],
            distances: vec![50.0],
            jitter_values: vec![0.01],
            schemes: vec![ModulationScheme::Bpsk],
            methods: vec![Method::McSymbol],
            mc: McConfig {
                num_trials: 20_000,
                ..McConfig::default()
            },
            ..SweepSpec::default()
        };
        let rows = run_sweep(&spec).unwrap();
        assert!(rows[0].ser.is_finite() && rows[0].note.is_none());
        assert!(rows[1].ser.is_nan());
        assert_eq!(rows[1].note.as_deref(), Some(MC_INFEASIBLE_NOTE));
        assert!(!rows[1].is_error());
    }

    #[test]
    fn invalid_specs_rejected() {
        let mut s = small_spec();
        s.snr_grid = vec![0.0, 0.0];
        assert!(run_sweep(&s).is_err());
        let mut s = small_spec();
        s.distances.clear();
        assert!(run_sweep(&s).is_err());
        let mut s = small_spec();
        s.distances = vec![-3.0];
        assert!(run_sweep(&s).is_err());
    }

    #[test]
    fn gap_of_identical_and_shifted_curves() {
        let rows = run_sweep(&small_spec()).unwrap();
        let c = curve(
            &rows,
            ModulationScheme::Bpsk,
            Method::ClosedForm,
            50.0,
            0.01,
        );
        assert_eq!(snr_gap_at_ser(&c, &c, 1e-3).unwrap(), 0.0);
        let shifted: Vec<SweepRow> = c
            .iter()
            .map(|r| SweepRow {
                snr_db: r.snr_db + 1.0,
                ..r.clone()
            })
            .collect();
        let gap = snr_gap_at_ser(&c, &shifted, 1e-3).unwrap();
        assert!((gap - 1.0).abs() < 1e-12, "{gap}");
        assert!(snr_gap_at_ser(&c, &c, 1e-40).is_err());
    }

    #[test]
    fn chernoff_looseness_gap_below_two_db() {
        let rows = run_sweep(&small_spec()).unwrap();
        let closed = curve(
            &rows,
            ModulationScheme::Bpsk,
            Method::ClosedForm,
            50.0,
            0.01,
        );
        let exact = curve(
            &rows,
            ModulationScheme::Bpsk,
            Method::QuadratureExact,
            50.0,
            0.01,
        );
        let gap = snr_gap_at_ser(&closed, &exact, 1e-4).unwrap();
        assert!(gap > 0.0 && gap < 2.0, "{gap}");
    }

    #[test]
    fn non_monotone_curve_is_rejected() {
        let mk = |snr_db: f64, ser: f64| SweepRow {
            scheme: ModulationScheme::Bpsk,
            method: Method::McSemi,
            snr_db,
            distance_m: 50.0,
            jitter: 0.01,
            ser,
            half_width: 0.0,
            a_param: 1.0,
            b_param: 1.0,
            note: None,
        };
        let bumpy = vec![mk(0.0, 0.1), mk(1.0, 0.2), mk(2.0, 0.01)];
        assert!(snr_gap_at_ser(&bumpy, &bumpy, 0.05).is_err());
    }

    #[test]
    fn validity_warnings() {
        assert!(validity_check(&LinkConfig::default()).is_empty());
        let far = LinkConfig {
            distance: 150.0,
            ..LinkConfig::default()
        };
        assert_eq!(
            validity_check(&far),
            vec![ValidityWarning::Distance { distance_m: 150.0 }]
        );
        let narrow = LinkConfig {
            beam_waist: 0.3,
            ..LinkConfig::default()
        };
        assert!(matches!(
            validity_check(&narrow)[..],
            [ValidityWarning::BeamRatio { .. }]
        ));
        let jittery = LinkConfig {
            jitter_value: 0.06,
            ..LinkConfig::default()
        };
        assert!(matches!(
            validity_check(&jittery)[..],
            [ValidityWarning::JitterVariance { .. }]
        ));
        let sd = LinkConfig {
            jitter_value: 0.3,
            jitter_interpretation: crate::channel::JitterInterpretation::StdDev,
            ..LinkConfig::default()
        };
        assert_eq!(validity_check(&sd).len(), 1);
        let edge = LinkConfig {
            jitter_value: 0.05,
            ..LinkConfig::default()
        };
        assert!(validity_check(&edge).is_empty());
        let low_f = LinkConfig {
            frequency: 150e9,
            ..LinkConfig::default()
        };
        assert!(matches!(
            validity_check(&low_f)[..],
            [ValidityWarning::Frequency { .. }]
        ));
    }
}
