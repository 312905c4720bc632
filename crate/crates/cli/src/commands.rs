use std::io::Write as _;
use std::path::{Path, PathBuf};

use cbw_core::analytic::cbw_intensities;
use cbw_core::circuit::parse_circuit;
use cbw_core::experiment::{
    analyze_series, estimate_sensitivity, find_extrema, run_scan, FringeStats, PztCalibration,
    ScanConfig, SensitivityReport, DEFAULT_PROMINENCE,
};
use cbw_core::io::{emit_plot_svg, read_trace_csv, render_trace_csv, PlotOptions, PlotSeries};
use cbw_core::montecarlo::{
    CountTrace, Counting, NoiseModel, RngSeed, SourceMode, SourceModel, TraceMode,
};
use clap::ValueEnum;
use serde::Serialize;

use crate::config::{parsed, ConfigFile};
use crate::phase::parse_phase;
use crate::{
    AnalyticArgs, AnalyzeArgs, ChainArgs, CliError, Command, CommonArgs, CountingArg, NoiseArgs,
    NoisePreset, ScanArgs, ScanCmdArgs, ScanMode, SensitivityArgs, SimulateArgs, SourceArgs,
};

type Result<T> = std::result::Result<T, CliError>;

const COMMON_KEYS: &[&str] = &["seed", "threads", "out"];
const ANALYTIC_KEYS: &[&str] = &[
    "modules",
    "phi",
    "points",
    "psi_start",
    "psi_end",
    "intensity",
];
const SIMULATE_KEYS: &[&str] = &[
    "modules",
    "phi",
    "circuit",
    "points",
    "duration",
    "bin",
    "ramp_start",
    "ramp_end",
    "cycles",
    "mean_photons",
    "window",
    "counting",
    "noise",
    "jitter_sigma",
    "jitter_correlation",
    "drift",
    "dark_rate",
    "efficiency",
];
const SCAN_KEYS: &[&str] = &["mode", "prominence"];
const ANALYZE_KEYS: &[&str] = &["in", "column", "prominence"];
const SENSITIVITY_KEYS: &[&str] = &["m_min", "m_max", "grid"];

const DEFAULT_SEED: u64 = 1;
const DEFAULT_SENSITIVITY_GRID: usize = 100_000;

fn value_enum<T: ValueEnum>(text: &str) -> std::result::Result<T, String> {
    T::from_str(text, true).map_err(|_| {
        let names: Vec<String> = T::value_variants()
            .iter()
            .filter_map(|v| v.to_possible_value().map(|p| p.get_name().to_string()))
            .collect();
        format!("`{text}` is not one of {}", names.join(", "))
    })
}

fn path_value(text: &str) -> std::result::Result<PathBuf, String> {
    Ok(PathBuf::from(text))
}

/// Settings after merging flags over the optional config file.
struct Resolved {
    file: ConfigFile,
}

impl Resolved {
    fn load(common: &CommonArgs, extra: &[&[&str]]) -> Result<Self> {
        let file = match &common.config {
            Some(path) => ConfigFile::load(path)?,
            None => ConfigFile::default(),
        };
        let allowed: Vec<&str> = COMMON_KEYS
            .iter()
            .chain(extra.iter().flat_map(|k| k.iter()))
            .copied()
            .collect();
        file.check_keys(&allowed)?;
        Ok(Self { file })
    }

    fn get<T: std::str::FromStr>(&self, key: &str, flag: Option<T>) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        Ok(self.file.resolve(key, flag, parsed::<T>)?)
    }

    fn phase(&self, key: &str, flag: Option<f64>) -> Result<Option<f64>> {
        Ok(self.file.resolve(key, flag, parse_phase)?)
    }

    fn seed(&self, common: &CommonArgs) -> Result<RngSeed> {
        Ok(RngSeed(
            self.get("seed", common.seed)?.unwrap_or(DEFAULT_SEED),
        ))
    }

    fn out(&self, common: &CommonArgs) -> Result<Option<PathBuf>> {
        Ok(self.file.resolve("out", common.out.clone(), path_value)?)
    }

    fn threads(&self, common: &CommonArgs) -> Result<Option<usize>> {
        let t = self.get("threads", common.threads)?;
        if t == Some(0) {
            return Err(CliError::Config("threads must be >= 1".into()));
        }
        Ok(t)
    }
}

pub(crate) fn execute(command: Command) -> Result<()> {
    match command {
        Command::Analytic(a) => analytic(a),
        Command::Simulate(a) => {
            let r = Resolved::load(&a.common, &[SIMULATE_KEYS])?;
            with_threads(r.threads(&a.common)?, || simulate(&r, a))
        }
        Command::Scan(a) => {
            let r = Resolved::load(&a.sim.common, &[SIMULATE_KEYS, SCAN_KEYS])?;
            with_threads(r.threads(&a.sim.common)?, || scan(&r, a))
        }
        Command::Analyze(a) => analyze(a),
        Command::Sensitivity(a) => sensitivity(a),
    }
}

fn with_threads(threads: Option<usize>, job: impl FnOnce() -> Result<()> + Send) -> Result<()> {
    match threads {
        None => job(),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Config(format!("cannot start {n} threads: {e}")))?
            .install(job),
    }
}

fn write_output(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display()))),
        None => std::io::stdout()
            .lock()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Config(format!("stdout: {e}"))),
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialize");
    s.push('\n');
    s
}

fn analytic(a: AnalyticArgs) -> Result<()> {
    let r = Resolved::load(&a.common, &[ANALYTIC_KEYS])?;
    let modules = r.get("modules", a.modules)?.unwrap_or(2);
    let phi = r.phase("phi", a.phi)?.unwrap_or(0.0);
    let points = r.get("points", a.points)?.unwrap_or(1001);
    let start = r.phase("psi_start", a.psi_start)?.unwrap_or(0.0);
    let end = r
        .phase("psi_end", a.psi_end)?
        .unwrap_or(std::f64::consts::TAU);
    let i0 = r.get("intensity", a.intensity)?.unwrap_or(1.0);
    if points < 2 {
        return Err(CliError::Config("points must be >= 2".into()));
    }

    let mut csv = String::from("psi_rad,i_gamma,i_delta\n");
    for i in 0..points {
        let psi = start + (end - start) * i as f64 / (points - 1) as f64;
        let p = cbw_intensities(psi, phi, modules, i0)?;
        csv.push_str(&format!(
            "{psi:.16e},{:.16e},{:.16e}\n",
            p.i_upper, p.i_lower
        ));
    }
    write_output(r.out(&a.common)?.as_deref(), &csv)
}

struct Experiment {
    scan: ScanConfig,
    source: SourceModel,
    noise: NoiseModel,
    seed: RngSeed,
}

fn experiment(
    r: &Resolved,
    common: &CommonArgs,
    chain: &ChainArgs,
    s: &ScanArgs,
    src: &SourceArgs,
    n: &NoiseArgs,
) -> Result<Experiment> {
    let defaults = ScanConfig::default();
    let points = r.get("points", s.points)?.unwrap_or(defaults.points);
    let bin = r.get("bin", s.bin)?.unwrap_or(defaults.bin_duration);
    let circuit = match r
        .file
        .resolve("circuit", chain.circuit.clone(), path_value)?
    {
        Some(path) => {
            let text = std::fs::read_to_string(&path)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            let ast = parse_circuit(&text)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            Some(ast)
        }
        None => None,
    };
    let scan = ScanConfig {
        ramp_start: r
            .get("ramp_start", s.ramp_start)?
            .unwrap_or(defaults.ramp_start),
        ramp_end: r.get("ramp_end", s.ramp_end)?.unwrap_or(defaults.ramp_end),
        scan_duration: r
            .get("duration", s.duration)?
            .unwrap_or(points as f64 * bin),
        points,
        bin_duration: bin,
        calibration: PztCalibration {
            cycles_per_full_ramp: r
                .get("cycles", s.cycles)?
                .unwrap_or(defaults.calibration.cycles_per_full_ramp),
        },
        phi: r.phase("phi", chain.phi)?.unwrap_or(defaults.phi),
        modules: r.get("modules", chain.modules)?.unwrap_or(defaults.modules),
        circuit,
    };
    scan.validate()?;

    let d = SourceModel::default();
    let counting = match r
        .file
        .resolve("counting", src.counting, value_enum::<CountingArg>)?
    {
        None | Some(CountingArg::Auto) => Counting::Auto,
        Some(CountingArg::PerWindow) => Counting::PerWindow,
        Some(CountingArg::Aggregated) => Counting::Aggregated,
    };
    let source = SourceModel {
        mean_photons_per_window: r
            .get("mean_photons", src.mean_photons)?
            .unwrap_or(d.mean_photons_per_window),
        window_duration: r.get("window", src.window)?.unwrap_or(d.window_duration),
        mode: SourceMode::PhotonCounting,
        counting,
    };
    source.validate()?;

    let preset = r
        .file
        .resolve("noise", n.noise, value_enum::<NoisePreset>)?;
    let base = match preset {
        None | Some(NoisePreset::Default) => NoiseModel::default(),
        Some(NoisePreset::None) => NoiseModel::none(),
    };
    let noise = NoiseModel {
        phase_jitter_sigma: r
            .get("jitter_sigma", n.jitter_sigma)?
            .unwrap_or(base.phase_jitter_sigma),
        phase_jitter_correlation: r
            .get("jitter_correlation", n.jitter_correlation)?
            .unwrap_or(base.phase_jitter_correlation),
        intensity_drift_fraction: r
            .get("drift", n.drift)?
            .unwrap_or(base.intensity_drift_fraction),
        dark_rate: r.get("dark_rate", n.dark_rate)?.unwrap_or(base.dark_rate),
        detector_efficiency: r
            .get("efficiency", n.efficiency)?
            .unwrap_or(base.detector_efficiency),
    };
    noise.validate()?;

    Ok(Experiment {
        scan,
        source,
        noise,
        seed: r.seed(common)?,
    })
}

fn simulate(r: &Resolved, a: SimulateArgs) -> Result<()> {
    let e = experiment(r, &a.common, &a.chain, &a.scan, &a.source, &a.noise)?;
    let trace = run_scan(&e.scan, &e.source, &e.noise, e.seed)?;
    write_output(r.out(&a.common)?.as_deref(), &render_trace_csv(&trace)?)
}

/// Analysis outcome for one trace column.
#[derive(Debug, Serialize)]
struct SeriesResult {
    column: String,
    fringe_count: Option<f64>,
    stats: Option<FringeStats>,
    error: Option<String>,
}

fn columns(trace: &CountTrace) -> Vec<(&'static str, &[f64])> {
    match trace.mode {
        TraceMode::PhotonCounting => vec![
            ("d1", &trace.singles_d1[..]),
            ("d2", &trace.singles_d2[..]),
            ("coinc", &trace.coincidences[..]),
        ],
        TraceMode::Classical => vec![
            ("i_gamma", &trace.singles_d1[..]),
            ("i_delta", &trace.singles_d2[..]),
        ],
    }
}

fn analyze_column(
    name: &str,
    values: &[f64],
    psi: &[f64],
    prominence: f64,
) -> (SeriesResult, Option<cbw_core::Error>) {
    let outcome = find_extrema(values, prominence)
        .and_then(|e| analyze_series(values, psi, prominence).map(|s| (e.fringe_count(), s)));
    match outcome {
        Ok((count, stats)) => (
            SeriesResult {
                column: name.to_string(),
                fringe_count: Some(count),
                stats: Some(stats),
                error: None,
            },
            None,
        ),
        Err(err) => (
            SeriesResult {
                column: name.to_string(),
                fringe_count: None,
                stats: None,
                error: Some(err.to_string()),
            },
            Some(err),
        ),
    }
}

fn mode_name(mode: TraceMode) -> &'static str {
    match mode {
        TraceMode::PhotonCounting => "photon_counting",
        TraceMode::Classical => "classical",
    }
}

#[derive(Debug, Serialize)]
struct ScanRun {
    mode: &'static str,
    csv: String,
    svg: String,
    windows_per_bin: Option<u64>,
    series: Vec<SeriesResult>,
}

#[derive(Debug, Serialize)]
struct ScanSummary {
    seed: u64,
    modules: Option<usize>,
    phi: f64,
    points: usize,
    scan_duration: f64,
    bin_duration: f64,
    cycles_per_full_ramp: f64,
    mean_photons_per_window: f64,
    window_duration: f64,
    noise: NoiseModel,
    prominence: f64,
    runs: Vec<ScanRun>,
}

fn plot(trace: &CountTrace, title: &str, path: &Path) -> Result<()> {
    let x = trace.time.clone();
    let series = match trace.mode {
        TraceMode::PhotonCounting => vec![
            PlotSeries::new("D1 singles", x.clone(), trace.singles_d1.clone()),
            PlotSeries::new("D2 singles", x.clone(), trace.singles_d2.clone()),
            PlotSeries::new("coincidences", x, trace.coincidences.clone()).on_right_axis(),
        ],
        TraceMode::Classical => vec![
            PlotSeries::new("I_gamma", x.clone(), trace.singles_d1.clone()),
            PlotSeries::new("I_delta", x, trace.singles_d2.clone()),
        ],
    };
    let (y_label, y2_label) = match trace.mode {
        TraceMode::PhotonCounting => ("singles per bin", "coincidences per bin"),
        TraceMode::Classical => ("output intensity", ""),
    };
    let options = PlotOptions {
        title: title.to_string(),
        x_label: "PZT scan time (s)".into(),
        y_label: y_label.into(),
        y2_label: y2_label.into(),
    };
    Ok(emit_plot_svg(&series, &options, path)?)
}

fn scan(r: &Resolved, a: ScanCmdArgs) -> Result<()> {
    let sim = &a.sim;
    let e = experiment(
        r,
        &sim.common,
        &sim.chain,
        &sim.scan,
        &sim.source,
        &sim.noise,
    )?;
    let mode = r
        .file
        .resolve("mode", a.mode, value_enum::<ScanMode>)?
        .unwrap_or(ScanMode::Both);
    let prominence = r
        .get("prominence", a.prominence)?
        .unwrap_or(DEFAULT_PROMINENCE);
    let out = r
        .out(&sim.common)?
        .ok_or_else(|| CliError::Config("scan needs --out <DIR>".into()))?;
    std::fs::create_dir_all(&out)
        .map_err(|err| CliError::Config(format!("{}: {err}", out.display())))?;

    let circuit_label = match &e.scan.circuit {
        Some(_) => "custom circuit".to_string(),
        None => format!("m={}", e.scan.modules),
    };
    let mut runs = Vec::new();
    let sources: Vec<(SourceModel, &str)> = match mode {
        ScanMode::Photon => vec![(e.source, "counts")],
        ScanMode::Classical => vec![(
            SourceModel {
                mode: SourceMode::ClassicalIntensity,
                ..e.source
            },
            "classical",
        )],
        ScanMode::Both => vec![
            (e.source, "counts"),
            (
                SourceModel {
                    mode: SourceMode::ClassicalIntensity,
                    ..e.source
                },
                "classical",
            ),
        ],
    };
    for (source, stem) in sources {
        let trace = run_scan(&e.scan, &source, &e.noise, e.seed)?;
        let csv_name = format!("{stem}.csv");
        let svg_name = format!("{stem}.svg");
        let csv_path = out.join(&csv_name);
        std::fs::write(&csv_path, render_trace_csv(&trace)?)
            .map_err(|err| CliError::Config(format!("{}: {err}", csv_path.display())))?;
        let title = format!(
            "{circuit_label}, phi = {:.4} rad, {}",
            e.scan.phi,
            mode_name(trace.mode).replace('_', " ")
        );
        plot(&trace, &title, &out.join(&svg_name))?;
        let series = columns(&trace)
            .into_iter()
            .map(|(name, values)| analyze_column(name, values, &trace.psi, prominence).0)
            .collect();
        runs.push(ScanRun {
            mode: mode_name(trace.mode),
            csv: csv_name,
            svg: svg_name,
            windows_per_bin: (trace.mode == TraceMode::PhotonCounting)
                .then_some(trace.metadata.windows_per_bin),
            series,
        });
    }

    let summary = ScanSummary {
        seed: e.seed.0,
        modules: e.scan.circuit.is_none().then_some(e.scan.modules),
        phi: e.scan.phi,
        points: e.scan.points,
        scan_duration: e.scan.scan_duration,
        bin_duration: e.scan.bin_duration,
        cycles_per_full_ramp: e.scan.calibration.cycles_per_full_ramp,
        mean_photons_per_window: e.source.mean_photons_per_window,
        window_duration: e.source.window_duration,
        noise: e.noise,
        prominence,
        runs,
    };
    write_output(Some(&out.join("summary.json")), &to_json(&summary))
}

#[derive(Debug, Serialize)]
struct AnalyzeReport {
    input: String,
    mode: &'static str,
    bins: usize,
    prominence: f64,
    series: Vec<SeriesResult>,
}

fn analyze(a: AnalyzeArgs) -> Result<()> {
    let r = Resolved::load(&a.common, &[ANALYZE_KEYS])?;
    let input = r
        .file
        .resolve("in", a.input.clone(), path_value)?
        .ok_or_else(|| CliError::Config("analyze needs --in <FILE>".into()))?;
    let column = r.get::<String>("column", a.column.clone())?;
    let prominence = r
        .get("prominence", a.prominence)?
        .unwrap_or(DEFAULT_PROMINENCE);
    let trace = read_trace_csv(&input)?;

    let all = columns(&trace);
    let selected: Vec<_> = match &column {
        None => all,
        Some(name) => {
            let names: Vec<&str> = all.iter().map(|(n, _)| *n).collect();
            let found: Vec<_> = all.into_iter().filter(|(n, _)| n == name).collect();
            if found.is_empty() {
                return Err(CliError::Config(format!(
                    "column `{name}` not in {} (columns: {})",
                    input.display(),
                    names.join(", ")
                )));
            }
            found
        }
    };

    let mut series = Vec::new();
    let mut errors = Vec::new();
    for (name, values) in selected {
        let (result, err) = analyze_column(name, values, &trace.psi, prominence);
        if let Some(err) = err {
            errors.push((name, err));
        }
        series.push(result);
    }
    let report = AnalyzeReport {
        input: input.display().to_string(),
        mode: mode_name(trace.mode),
        bins: trace.len(),
        prominence,
        series,
    };
    let failed = errors.len() == report.series.len();
    if !failed {
        for (name, err) in &errors {
            eprintln!("warning: column `{name}`: {err}");
        }
        return write_output(r.out(&a.common)?.as_deref(), &to_json(&report));
    }
    let (name, err) = errors.into_iter().next().expect("at least one column");
    let message = format!("{}: column `{name}`: {err}", input.display());
    Err(if err.is_analysis() {
        CliError::Analysis(message)
    } else {
        CliError::Config(message)
    })
}

#[derive(Debug, Serialize)]
struct SensitivityOutput {
    grid: usize,
    reports: Vec<SensitivityReport>,
}

fn sensitivity(a: SensitivityArgs) -> Result<()> {
    let r = Resolved::load(&a.common, &[SENSITIVITY_KEYS])?;
    let m_min = r.get("m_min", a.m_min)?.unwrap_or(1);
    let m_max = r.get("m_max", a.m_max)?.unwrap_or(5);
    let grid = r.get("grid", a.grid)?.unwrap_or(DEFAULT_SENSITIVITY_GRID);
    if m_min == 0 || m_max < m_min {
        return Err(CliError::Config(format!(
            "need 1 <= m_min <= m_max, got m_min={m_min} m_max={m_max}"
        )));
    }
    let reports = (m_min..=m_max)
        .map(|m| estimate_sensitivity(m, grid))
        .collect::<cbw_core::Result<Vec<_>>>()?;
    write_output(
        r.out(&a.common)?.as_deref(),
        &to_json(&SensitivityOutput { grid, reports }),
    )
}
