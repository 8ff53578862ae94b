//! Reference figures and efficiencies. Every target writes its data and
//! compares a few numbers with embedded expected values; a miss is a
//! regression and makes the command exit with code 2.

use std::f64::consts::FRAC_1_SQRT_2;

use afc_core::csv::CsvWriter;
use afc_core::propagation::{extract_train, gaussian_spectrum, propagate, Extraction};
use afc_core::protocol::{single_pass_closed, two_pass_closed, Passes, Simulation, TimeBinQubit};
use afc_core::susceptibility::{
    epsilon_broadened_periodic, epsilon_peak_center, symmetric_grid, ComplexResponse,
};
use afc_core::sweep::{optimal_curve, sweep, write_optimal_curve, Axis, Objective, Param, Point, SweepRequest};
use afc_core::train::{
    broadened_a_coefficients, first_echo_intensity, global_maximum, intensity_table,
    series_coefficients_square, write_intensity_table,
};
use afc_core::{
    CombShape, CombSpec, Complex64, FrequencyGrid, MediumResponse, MediumSpec, Model, PulseSpec,
};

use crate::commands::{write_artifact, CliError, Context, Outcome};

/// Homogeneous rate of the realistic examples (`gamma = 5 kHz` at `2 nu0 = 2 MHz`).
const REALISTIC_GAMMA: f64 = 0.005;

pub const TARGETS: [(&str, &str); 22] = [
    ("fig1", "population difference of square and Lorentzian combs, F = 10"),
    ("fig2a", "first-echo intensity against d_p for F = 2, 5, 10"),
    ("fig2b", "global maximum of the first echo against 1/F"),
    ("fig3a", "broadened absorption and dispersion, delta = 0.1, gamma = 0.01"),
    ("fig3b", "broadened absorption and dispersion, delta = 0.2, gamma = 0.01"),
    ("fig4", "numerical A0 against delta/nu0, gamma = 0.01"),
    ("fig5", "ideal square-comb absorption and dispersion, delta = 0.1"),
    ("fig6a", "output pulse train, F = 2, d_p = 4"),
    ("fig6b", "output pulse train, F = 5, d_p = 10, gamma = 0.005"),
    ("fig6c", "output pulse train, F = 5, d_p = 25"),
    ("fig6d", "output pulse train, F = 5, d_p = 42"),
    ("fig7", "intensities of the first three echoes against d_p, F = 5"),
    ("fig8", "two-pulse input through the comb, F = 5, d_p = 10, sigma = 7"),
    ("i1-f2", "first-echo optimum at F = 2"),
    ("i1-f10", "first-echo optimum at F = 10"),
    ("harmonic", "harmonic comb at d_p = 4"),
    ("ceiling", "single-pass ceiling at F = 32"),
    ("window", "homogeneous-broadening corrections"),
    ("single-pass", "realistic single pass, F = 5"),
    ("two-pass", "two-pass protocol at F = 5 and F = 10"),
    ("shallow", "first-echo intensity at d_p = 2, F = 10"),
    ("all", "every target above"),
];

#[derive(Clone, Debug)]
struct Check {
    label: String,
    value: f64,
    expected: f64,
    tolerance: f64,
}

impl Check {
    fn new(label: impl Into<String>, value: f64, expected: f64, tolerance: f64) -> Self {
        Self {
            label: label.into(),
            value,
            expected,
            tolerance,
        }
    }

    /// Relative agreement, stored as a ratio against 1.
    fn relative(label: impl Into<String>, value: f64, reference: f64, tolerance: f64) -> Self {
        Self::new(label, value / reference, 1.0, tolerance)
    }

    fn passed(&self) -> bool {
        (self.value - self.expected).abs() <= self.tolerance
    }

    fn describe(&self) -> String {
        format!(
            "{}={:.6} (expected {} +- {})",
            self.label,
            self.value,
            short(self.expected),
            short(self.tolerance)
        )
    }
}

fn short(x: f64) -> String {
    let s = format!("{x:.6}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s.is_empty() || s == "-" { "0".into() } else { s.into() }
}

type Produced = (Vec<std::path::PathBuf>, Vec<Check>);

pub fn run(target: &str, ctx: &Context) -> Result<Outcome, CliError> {
    let names: Vec<&str> = if target == "all" {
        TARGETS.iter().map(|t| t.0).filter(|t| *t != "all").collect()
    } else if TARGETS.iter().any(|t| t.0 == target) {
        vec![target]
    } else {
        let known: Vec<&str> = TARGETS.iter().map(|t| t.0).collect();
        return Err(CliError::Usage(format!(
            "unknown reproduce target `{target}` (expected one of {})",
            known.join(", ")
        )));
    };
    let mut outcome = Outcome::default();
    let mut checks = Vec::new();
    for name in &names {
        let (artifacts, mut c) = produce(name, ctx)?;
        for check in &c {
            eprintln!(
                "{name}: {} {}",
                check.describe(),
                if check.passed() { "ok" } else { "REGRESSION" }
            );
        }
        outcome.artifacts.extend(artifacts);
        checks.append(&mut c);
    }
    outcome.failures = checks.iter().filter(|c| !c.passed()).map(Check::describe).collect();
    let passed = checks.len() - outcome.failures.len();
    outcome.summary = if names.len() == 1 {
        format!("target={target} {} checks={passed}/{}", checks[0].describe(), checks.len())
    } else {
        format!("target={target} checks={passed}/{}", checks.len())
    };
    Ok(outcome)
}

fn produce(name: &str, ctx: &Context) -> Result<Produced, CliError> {
    match name {
        "fig1" => fig1(ctx),
        "fig2a" => fig2a(ctx),
        "fig2b" => fig2b(ctx),
        "fig3a" => fig3(ctx, "fig3a", 0.1, Some(0.937)),
        "fig3b" => fig3(ctx, "fig3b", 0.2, None),
        "fig4" => fig4(ctx),
        "fig5" => fig5(ctx),
        "fig6a" => fig6(ctx, "fig6a", 2.0, 4.0, 0.0, 1, Some(0.219)),
        "fig6b" => fig6(ctx, "fig6b", 5.0, 10.0, REALISTIC_GAMMA, 1, Some(0.46)),
        "fig6c" => fig6(ctx, "fig6c", 5.0, 25.0, 0.0, 2, None),
        "fig6d" => fig6(ctx, "fig6d", 5.0, 42.0, 0.0, 3, None),
        "fig7" => fig7(ctx),
        "fig8" => fig8(ctx),
        "i1-f2" => optimum(2.0, 12.0, 4.0, 0.219),
        "i1-f10" => optimum(10.0, 40.0, 20.0, 0.524),
        "harmonic" => Ok((
            vec![],
            vec![Check::new(
                "I1",
                first_echo_intensity(CombShape::Harmonic, 4.0, 2.0, 0.0)?,
                0.1353,
                1e-4,
            )],
        )),
        "ceiling" => Ok((vec![], vec![Check::new("I_gl", global_maximum(32.0)?, 0.54, 0.005)])),
        "window" => window(),
        "single-pass" => single(ctx),
        "two-pass" => two(ctx),
        "shallow" => Ok((
            vec![],
            vec![Check::new(
                "I1",
                first_echo_intensity(CombShape::Square, 2.0, 10.0, 0.0)?,
                0.0317,
                0.0005,
            )],
        )),
        _ => unreachable!("target list and dispatch disagree"),
    }
}

fn fig1(ctx: &Context) -> Result<Produced, CliError> {
    let square = CombSpec::with_finesse(CombShape::Square, 10.0);
    let lorentz = CombSpec::with_finesse(CombShape::Lorentzian, 10.0);
    let nu = symmetric_grid(3.0, 1201);
    let mut rows = Vec::with_capacity(nu.len());
    for &x in &nu {
        rows.push([x, square.population_difference(x)?, lorentz.population_difference(x)?]);
    }
    let path = write_artifact(&ctx.out_dir, "fig1.csv", |w| {
        let mut w = CsvWriter::new(w);
        w.header(&["nu_over_nu0", "square", "lorentzian"])?;
        for r in &rows {
            let x = ctx.physical.map_or(r[0], |u| u.freq_to_physical(r[0]));
            w.numbers(&[x, r[1], r[2]])?;
        }
        Ok(())
    })?;
    // one period [-1, 1): 400 samples
    let period: Vec<&[f64; 3]> = rows.iter().filter(|r| r[0] >= -1.0 && r[0] < 1.0).collect();
    let duty = period.iter().map(|r| r[1]).sum::<f64>() / period.len() as f64;
    Ok((vec![path], vec![Check::new("duty_cycle", duty, 0.1, 3e-3)]))
}

fn fig2a(ctx: &Context) -> Result<Produced, CliError> {
    let depths: Vec<f64> = (0..=400).map(|i| 0.1 * i as f64).collect();
    let finesses = [2.0, 5.0, 10.0];
    let mut table = Vec::with_capacity(depths.len());
    for &d in &depths {
        let mut row = vec![d];
        for f in finesses {
            row.push(first_echo_intensity(CombShape::Square, d, f, 0.0)?);
        }
        table.push(row);
    }
    let path = write_artifact(&ctx.out_dir, "fig2a.csv", |w| {
        let mut w = CsvWriter::new(w);
        w.header(&["d_p", "I1_F2", "I1_F5", "I1_F10"])?;
        table.iter().try_for_each(|r| w.numbers(r))
    })?;
    let max = |c: usize| table.iter().map(|r| r[c]).fold(0.0, f64::max);
    Ok((
        vec![path],
        vec![
            Check::new("max_I1_F2", max(1), 0.219, 0.002),
            Check::new("max_I1_F10", max(3), 0.524, 0.002),
        ],
    ))
}

fn fig2b(ctx: &Context) -> Result<Produced, CliError> {
    let x: Vec<f64> = (1..=100).map(|i| 0.005 * i as f64).collect();
    let pts = optimal_curve(&x)?;
    let path = write_artifact(&ctx.out_dir, "fig2b.csv", |w| write_optimal_curve(w, &pts))?;
    Ok((
        vec![path],
        vec![
            Check::new("I_gl_F10", global_maximum(10.0)?, 0.524, 0.002),
            Check::new("I_gl_F32", global_maximum(32.0)?, 0.54, 0.005),
        ],
    ))
}

fn fig3(ctx: &Context, name: &str, delta: f64, peak: Option<f64>) -> Result<Produced, CliError> {
    let gamma = 0.01;
    let pairs = ctx.config.pairs;
    let data = ComplexResponse::broadened(symmetric_grid(3.0, 1201), delta, gamma, pairs, ctx.exec)?;
    let path = write_artifact(&ctx.out_dir, &format!("{name}.csv"), |w| data.write_csv(w, ctx.physical))?;
    let at_peak = afc_core::susceptibility::epsilon_broadened(1.0, delta, 1.0, gamma, pairs)?.absorption;
    let mut checks = vec![Check::new(
        "eps_peak_vs_closed_form",
        at_peak,
        epsilon_peak_center(delta, 1.0, gamma)?,
        2e-3,
    )];
    if let Some(p) = peak {
        checks.push(Check::new("eps_peak", at_peak, p, 0.001));
    }
    Ok((vec![path], checks))
}

fn fig4(ctx: &Context) -> Result<Produced, CliError> {
    let gamma = 0.01;
    let deltas: Vec<f64> = (1..=25).map(|i| 0.02 * i as f64).collect();
    let mut rows = Vec::with_capacity(deltas.len());
    for &d in &deltas {
        let a = broadened_a_coefficients(d, 1.0, gamma, None)?;
        rows.push([d, a.a0, d]);
    }
    let path = write_artifact(&ctx.out_dir, "fig4.csv", |w| {
        let mut w = CsvWriter::new(w);
        w.header(&["delta_over_nu0", "a0_numeric", "alpha0_over_alpha"])?;
        rows.iter().try_for_each(|r| w.numbers(r))
    })?;
    let worst = rows.iter().map(|r| (r[1] - r[2]).abs()).fold(0.0, f64::max);
    let wide = broadened_a_coefficients(0.2, 1.0, 0.1, None)?.a0;
    Ok((
        vec![path],
        vec![
            Check::new("max_abs(A0 - delta/nu0)", worst, 0.0, 1e-3),
            Check::new("A0_gamma0.1_delta0.2", wide, 0.2, 1e-3),
        ],
    ))
}

fn fig5(ctx: &Context) -> Result<Produced, CliError> {
    let harmonics = ctx.config.harmonics;
    let data = ComplexResponse::square_series(symmetric_grid(3.0, 1201), 0.1, harmonics, ctx.exec)?;
    let path = write_artifact(&ctx.out_dir, "fig5.csv", |w| data.write_csv(w, ctx.physical))?;
    let peak = afc_core::susceptibility::chi_square_series(1.0, 0.1, harmonics)?.absorption;
    let window = afc_core::susceptibility::chi_square_series(0.0, 0.1, harmonics)?.absorption;
    Ok((
        vec![path],
        vec![
            Check::new("absorption_peak", peak, 1.0, 2e-3),
            Check::new("absorption_window", window, 0.0, 2e-3),
        ],
    ))
}

fn fig6(
    ctx: &Context,
    name: &str,
    finesse: f64,
    d_p: f64,
    gamma: f64,
    dominant: usize,
    expected: Option<f64>,
) -> Result<Produced, CliError> {
    let grid = FrequencyGrid::for_pulse(5.0);
    let comb = CombSpec::with_finesse(CombShape::Square, finesse).gamma(gamma);
    let model = if gamma > 0.0 {
        Model::BroadenedPeriodic
    } else {
        Model::windowed_series(grid, 1.0)
    };
    let h = MediumResponse::new(comb, MediumSpec::new(d_p), model)?.sample(grid, ctx.exec)?;
    let out = propagate(&gaussian_spectrum(&PulseSpec::gaussian(5.0), grid)?, &h)?;
    let t = comb.delay_time();
    let k_max = ctx.config.k_max.max(4);
    let train = extract_train(&out, Extraction::new(t, k_max))?;
    let trace = write_artifact(&ctx.out_dir, &format!("{name}_trace.csv"), |w| {
        out.write_trace_csv(w, t, -0.5 * t, (k_max as f64 + 0.5) * t, ctx.physical)
    })?;
    let pulses = write_artifact(&ctx.out_dir, &format!("{name}.csv"), |w| train.write_csv(w))?;
    let got = train.intensity(dominant).unwrap_or(0.0);
    let series = series_coefficients_square(d_p, finesse, dominant)?
        .with_decay(comb.gamma_t())
        .intensity(dominant);
    let mut checks = vec![];
    if let Some(v) = expected {
        checks.push(Check::new(format!("I{dominant}"), got, v, 0.01));
    }
    checks.push(Check::relative(format!("I{dominant}/series"), got, series, 0.01));
    checks.push(Check::new(
        "dominant_echo",
        train.dominant_echo().unwrap_or(0) as f64,
        dominant as f64,
        0.0,
    ));
    Ok((vec![pulses, trace], checks))
}

fn fig7(ctx: &Context) -> Result<Produced, CliError> {
    let depths: Vec<f64> = (0..=600).map(|i| 0.1 * i as f64).collect();
    let rows = intensity_table(5.0, &depths, 3)?;
    let path = write_artifact(&ctx.out_dir, "fig7.csv", |w| write_intensity_table(w, &rows))?;
    let argmax = |k: usize| {
        rows.iter()
            .max_by(|a, b| a.1[k - 1].total_cmp(&b.1[k - 1]))
            .map_or(f64::NAN, |r| r.0)
    };
    Ok((
        vec![path],
        vec![
            Check::new("argmax_I1", argmax(1), 10.0, 0.1),
            Check::new("argmax_I2", argmax(2), 25.0, 0.5),
            Check::new("argmax_I3", argmax(3), 42.0, 0.5),
        ],
    ))
}

fn fig8(ctx: &Context) -> Result<Produced, CliError> {
    let sigma = 7.0;
    let comb = CombSpec::with_finesse(CombShape::Square, 5.0);
    let medium = MediumSpec::new(10.0);
    let t = comb.delay_time();
    let c = Complex64::new(FRAC_1_SQRT_2, 0.0);
    let q = TimeBinQubit::new(c, c, 0.0, 0.5 * t, sigma)?;
    let grid = FrequencyGrid::for_pulse(sigma);
    let model = Model::windowed_series(grid, 1.0);
    let h = MediumResponse::new(comb, medium, model)?.sample(grid, ctx.exec)?;
    let out = propagate(&q.spectrum(grid)?, &h)?;
    let path = write_artifact(&ctx.out_dir, "fig8.csv", |w| {
        out.write_trace_csv(w, t, -t, 2.0 * t, ctx.physical)
    })?;
    let sim = Simulation::new(comb, medium, model)?.grid(grid).timebin(&q, Passes::One)?;
    let closed = afc_core::protocol::timebin_transform(&q, &comb, &medium, Passes::One)?;
    let ratio = (sim.c2d / sim.c1d).norm();
    Ok((
        vec![path],
        vec![
            Check::relative("delayed_probability/closed_form", sim.delayed_probability(), closed.delayed_probability(), 0.02),
            Check::new("|c2d/c1d|", ratio, 1.0, 0.01),
        ],
    ))
}

fn optimum(finesse: f64, hi: f64, d_opt: f64, i1: f64) -> Result<Produced, CliError> {
    let req = SweepRequest::new(
        Objective::FirstEcho,
        Point::square(finesse, 0.0, 0.0),
        vec![Axis::linear(Param::OpticalDepth, 0.0, hi, 121)],
    );
    let m = sweep(&req)?
        .argmax
        .ok_or_else(|| CliError::Usage("sweep produced no valid row".into()))?;
    let (d, i) = m.refined.map_or((m.values[0], m.efficiency), |(v, e)| (v[0], e));
    Ok((
        vec![],
        vec![
            Check::new("I1", i, i1, 0.002),
            Check::new("d_p", d, d_opt, hi / 120.0),
        ],
    ))
}

fn window() -> Result<Produced, CliError> {
    let window = epsilon_broadened_periodic(0.0, 0.1, 1.0, 0.01)?.absorption;
    Ok((
        vec![],
        vec![
            Check::new("eps_peak", epsilon_peak_center(0.1, 1.0, 0.01)?, 0.937, 0.001),
            Check::new("window_transmission", (-20.0 * window).exp(), 0.97, 0.005),
            Check::new("A0_gamma0.01", broadened_a_coefficients(0.2, 1.0, 0.01, None)?.a0, 0.2, 1e-3),
            Check::new("A0_gamma0.1", broadened_a_coefficients(0.2, 1.0, 0.1, None)?.a0, 0.2, 1e-3),
        ],
    ))
}

fn simulated(comb: CombSpec, medium: MediumSpec, two: bool) -> Result<f64, CliError> {
    let sim = Simulation::new(comb, medium, Model::BroadenedPeriodic)?;
    let input = PulseSpec::gaussian(5.0);
    let r = if two { sim.two_pass(&input)? } else { sim.single_pass(&input)? };
    Ok(r.efficiency)
}

fn single(ctx: &Context) -> Result<Produced, CliError> {
    let comb = CombSpec::with_finesse(CombShape::Square, 5.0).gamma(REALISTIC_GAMMA);
    let mut checks = Vec::new();
    for (d, expected, tol) in [(3.0, 0.17, 0.005), (10.0, 0.46, 0.005)] {
        let medium = MediumSpec::new(d);
        let closed = single_pass_closed(&comb, &medium)?.efficiency;
        checks.push(Check::new(format!("efficiency_d{d}"), closed, expected, tol));
        checks.push(Check::relative(
            format!("simulated/closed_d{d}"),
            simulated(comb, medium, false)?,
            closed,
            ctx.config.tolerance,
        ));
    }
    Ok((vec![], checks))
}

fn two(ctx: &Context) -> Result<Produced, CliError> {
    let mut checks = Vec::new();
    for (f, d, expected) in [(5.0, 10.0, 0.86), (10.0, 20.0, 0.95)] {
        let comb = CombSpec::with_finesse(CombShape::Square, f).gamma(REALISTIC_GAMMA);
        let medium = MediumSpec::new(d);
        let closed = two_pass_closed(&comb, &medium)?.efficiency;
        checks.push(Check::new(format!("efficiency_F{f}"), closed, expected, 0.01));
        checks.push(Check::relative(
            format!("simulated/closed_F{f}"),
            simulated(comb, medium, true)?,
            closed,
            ctx.config.tolerance,
        ));
    }
    Ok((vec![], checks))
}
