use std::fs;
use std::path::{Path, PathBuf};

use nbds_core::simulate::{
    compare_traces, integrate_netlist, integrate_reference, read_csv, write_csv, CompareReport,
    SimConfig, SimError, Trace, Waveform,
};
use nbds_core::synth::{export_dot, export_json, synthesize, DeviceParams, Netlist, SynthError};
use nbds_core::system::{builtin, load_system, to_electrical, DynamicalSystem, UnitMap, BUILTIN_NAMES};
use serde::Serialize;
use thiserror::Error;

use crate::Mode;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {message}")]
    Input { path: String, message: String },
    #[error("{0}")]
    Usage(String),
    #[error("synthesis failed: {0}")]
    Synthesis(SynthError),
    #[error("{0}")]
    Compare(SimError),
    #[error("simulation aborted: {0}")]
    Numerical(SimError),
    #[error("cannot write {path}: {message}")]
    Output { path: String, message: String },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Input { .. } | CliError::Usage(_) | CliError::Output { .. } => 2,
            CliError::Synthesis(_) => 3,
            CliError::Compare(_) => 4,
            CliError::Numerical(_) => 5,
        }
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Input {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

fn write(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| CliError::Output {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

fn prepare(out: &Path) -> Result<(), CliError> {
    fs::create_dir_all(out).map_err(|e| CliError::Output {
        path: out.display().to_string(),
        message: e.to_string(),
    })
}

/// A built-in name or a model document, in model units.
fn load_model(model: &str) -> Result<DynamicalSystem, CliError> {
    if BUILTIN_NAMES.contains(&model) {
        return builtin(model).map_err(|e| CliError::Usage(e.to_string()));
    }
    let path = Path::new(model);
    let text = read(path)?;
    load_system(&text).map_err(|e| CliError::Input {
        path: model.to_string(),
        message: e.to_string(),
    })
}

fn load_device(device: Option<&Path>) -> Result<DeviceParams, CliError> {
    match device {
        None => Ok(DeviceParams::default()),
        Some(p) => DeviceParams::from_json(&read(p)?).map_err(|e| CliError::Input {
            path: p.display().to_string(),
            message: e.to_string(),
        }),
    }
}

fn build(system: &DynamicalSystem, device: &DeviceParams) -> Result<Netlist, CliError> {
    synthesize(system, device, &UnitMap::default()).map_err(CliError::Synthesis)
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    model: &'a str,
    device: Option<String>,
    out: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    sim: Option<&'a SimConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    mode: Option<Mode>,
    outputs: Vec<String>,
}

fn write_manifest(out: &Path, manifest: &Manifest) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(manifest).expect("manifest serializes");
    write(&out.join("manifest.json"), &(text + "\n"))
}

fn stem(model: &str) -> String {
    Path::new(model)
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| model.to_string())
}

pub fn synth(model: &str, device: Option<&Path>, out: &Path) -> Result<(), CliError> {
    let system = load_model(model)?;
    let dev = load_device(device)?;
    let netlist = build(&to_electrical(&system, &UnitMap::default()), &dev)?;
    prepare(out)?;
    let name = stem(model);
    let json = format!("{name}.netlist.json");
    let dot = format!("{name}.dot");
    write(&out.join(&json), &(export_json(&netlist) + "\n"))?;
    write(&out.join(&dot), &export_dot(&netlist))?;
    write_manifest(
        out,
        &Manifest {
            command: "synth",
            model,
            device: device.map(|p| p.display().to_string()),
            out: out.display().to_string(),
            sim: None,
            mode: None,
            outputs: vec![json, dot],
        },
    )?;
    println!("{}", netlist.census);
    Ok(())
}

pub struct SimArgs {
    pub model: String,
    pub device: Option<PathBuf>,
    pub mode: Mode,
    pub dt: f64,
    pub tend: f64,
    pub stride: usize,
    pub inputs: Vec<String>,
    pub out: PathBuf,
    pub jobs: usize,
}

fn parse_input(spec: &str) -> Result<(String, Waveform), CliError> {
    let (name, wave) = spec
        .split_once('=')
        .ok_or_else(|| CliError::Usage(format!("--input `{spec}`: expected NAME=WAVE")))?;
    let w = wave
        .parse::<Waveform>()
        .map_err(|e| CliError::Usage(format!("--input `{spec}`: {e}")))?;
    Ok((name.to_string(), w))
}

fn simulate(
    kind: Mode,
    system: &DynamicalSystem,
    netlist: Option<&Netlist>,
    cfg: &SimConfig,
) -> Result<Trace, SimError> {
    match (kind, netlist) {
        (Mode::Netlist, Some(n)) => integrate_netlist(n, cfg),
        _ => integrate_reference(system, cfg),
    }
}

fn sim_error(e: SimError) -> CliError {
    match e {
        SimError::NonFiniteState { .. } => CliError::Numerical(e),
        other => CliError::Usage(other.to_string()),
    }
}

pub fn sim(args: SimArgs) -> Result<(), CliError> {
    let system = load_model(&args.model)?;
    let device = load_device(args.device.as_deref())?;
    let electrical = to_electrical(&system, &UnitMap::default());
    let mut cfg = SimConfig::new(args.dt, args.tend).with_stride(args.stride);
    for spec in &args.inputs {
        let (name, w) = parse_input(spec)?;
        cfg = cfg.with_drive(&name, w);
    }
    cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    if args.jobs == 0 {
        return Err(CliError::Usage("--jobs must be at least 1".into()));
    }
    let netlist = match args.mode {
        Mode::Ref => None,
        Mode::Netlist | Mode::Both => Some(build(&electrical, &device)?),
    };
    let kinds: Vec<Mode> = match args.mode {
        Mode::Both => vec![Mode::Ref, Mode::Netlist],
        m => vec![m],
    };
    let results: Vec<Result<Trace, SimError>> = if args.jobs > 1 && kinds.len() > 1 {
        std::thread::scope(|s| {
            let handles: Vec<_> = kinds
                .iter()
                .map(|k| {
                    let (e, n, c) = (&electrical, netlist.as_ref(), &cfg);
                    s.spawn(move || simulate(*k, e, n, c))
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("simulation thread"))
                .collect()
        })
    } else {
        kinds
            .iter()
            .map(|k| simulate(*k, &electrical, netlist.as_ref(), &cfg))
            .collect()
    };

    prepare(&args.out)?;
    let name = stem(&args.model);
    let mut outputs = Vec::new();
    let mut traces = Vec::new();
    let mut abort = None;
    for (kind, result) in kinds.iter().zip(results) {
        let label = if *kind == Mode::Ref { "ref" } else { "netlist" };
        let file = format!("{name}_{label}.csv");
        let trace = match result {
            Ok(t) => t,
            Err(SimError::NonFiniteState { time, partial }) => {
                write(&args.out.join(&file), &write_csv(&partial))?;
                outputs.push(file);
                abort.get_or_insert(SimError::NonFiniteState { time, partial });
                continue;
            }
            Err(e) => return Err(sim_error(e)),
        };
        write(&args.out.join(&file), &write_csv(&trace))?;
        println!(
            "{file}: {} samples, {} events",
            trace.len(),
            trace.events.len()
        );
        outputs.push(file);
        traces.push(trace);
    }
    if traces.len() == 2 && abort.is_none() {
        let report = compare_traces(&traces[0], &traces[1]).map_err(CliError::Compare)?;
        print_report(&report);
        let file = "report.json".to_string();
        write(&args.out.join(&file), &report_json(&report))?;
        outputs.push(file);
    }
    write_manifest(
        &args.out,
        &Manifest {
            command: "sim",
            model: &args.model,
            device: args.device.as_ref().map(|p| p.display().to_string()),
            out: args.out.display().to_string(),
            sim: Some(&cfg),
            mode: Some(args.mode),
            outputs,
        },
    )?;
    match abort {
        Some(e) => Err(CliError::Numerical(e)),
        None => Ok(()),
    }
}

fn report_json(r: &CompareReport) -> String {
    serde_json::to_string_pretty(r).expect("report serializes") + "\n"
}

fn print_report(r: &CompareReport) {
    let period = |p: Option<f64>| p.map_or("none".to_string(), |v| format!("{v:.6e} s"));
    println!(
        "rmse={:.6e} A max_abs_err={:.6e} A rel_rmse={:.6e} period_ref={} period_test={}",
        r.rmse,
        r.max_abs_err,
        r.rel_rmse,
        period(r.period_ref),
        period(r.period_test)
    );
}

pub fn compare(reference: &Path, test: &Path, out: Option<&Path>) -> Result<(), CliError> {
    let load = |p: &Path| -> Result<Trace, CliError> {
        read_csv(&read(p)?).map_err(|e| CliError::Input {
            path: p.display().to_string(),
            message: e.to_string(),
        })
    };
    let a = load(reference)?;
    let b = load(test)?;
    let report = compare_traces(&a, &b).map_err(CliError::Compare)?;
    print_report(&report);
    match out {
        Some(dir) => {
            prepare(dir)?;
            write(&dir.join("report.json"), &report_json(&report))
        }
        None => {
            print!("{}", report_json(&report));
            Ok(())
        }
    }
}
