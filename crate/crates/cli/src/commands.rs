//! The four subcommands: spectrum, ramp, gate, sweep.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use czpulse_core::device::{spectrum_comparison, DeviceSpec};
use czpulse_core::gate::{simulate_gate, GateModel};
use czpulse_core::optimize::{
    build_protocol_schedule, mean_stark_shift, seed_correction, synthesize_ramp,
};
use czpulse_core::pulse::{
    faquad_mu, invariant_ansatz, invariant_defect, lr_phases, waiting_time, ProtocolKind,
    RampDirection,
};
use czpulse_core::sweep::{sweep, to_csv, SweepMode, SweepRow, CSV_HEADER};
use czpulse_core::units::{to_ghz, to_mhz};

use crate::config::RunConfig;
use crate::{CliError, CliResult};

/// Per-invocation overrides from the command line.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out_dir: Option<PathBuf>,
    pub protocol: Option<ProtocolKind>,
    pub mode: Option<SweepMode>,
    pub workers: Option<usize>,
    pub seed_only: bool,
    pub model: Option<GateModel>,
    pub ramp_time: Option<f64>,
}

fn prepare_out_dir(config: &RunConfig, overrides: &Overrides) -> CliResult<PathBuf> {
    let dir = overrides
        .out_dir
        .clone()
        .unwrap_or_else(|| PathBuf::from(&config.output.directory));
    fs::create_dir_all(&dir)?;
    fs::write(dir.join("config_echo.toml"), config.echo_toml())?;
    Ok(dir)
}

fn write_file(path: &Path, contents: &str) -> CliResult<()> {
    fs::write(path, contents)?;
    Ok(())
}

fn calibrate(config: &RunConfig) -> CliResult<DeviceSpec> {
    Ok(DeviceSpec::calibrate(&config.device_params())?)
}

/// Six lowest levels of the full and effective models over a 101-point
/// coupling grid; writes `spectrum.csv`.
pub fn cmd_spectrum(config: &RunConfig, overrides: &Overrides) -> CliResult<()> {
    let dir = prepare_out_dir(config, overrides)?;
    let device = calibrate(config)?;
    let points = spectrum_comparison(&device, 101)?;
    let mut out = String::from(
        "J_MHz,E1_full_GHz,E2_full_GHz,E3_full_GHz,E4_full_GHz,E5_full_GHz,E6_full_GHz,\
E1_eff_GHz,E2_eff_GHz,E3_eff_GHz,E4_eff_GHz,E5_eff_GHz,E6_eff_GHz,max_dev_MHz\n",
    );
    let mut worst: f64 = 0.0;
    for p in &points {
        worst = worst.max(p.max_dev);
        let mut line = format!("{:.9e}", to_mhz(p.j));
        for e in p.full {
            line.push_str(&format!(",{:.12e}", to_ghz(e)));
        }
        for e in p.effective {
            line.push_str(&format!(",{:.12e}", to_ghz(e)));
        }
        line.push_str(&format!(",{:.9e}\n", to_mhz(p.max_dev)));
        out.push_str(&line);
    }
    let path = dir.join("spectrum.csv");
    write_file(&path, &out)?;
    println!(
        "spectrum: {} points over J in [0, 2pi x {:.3} MHz] -> {}",
        points.len(),
        to_mhz(device.j_max()),
        path.display()
    );
    println!("spectrum: max full-vs-effective deviation 2pi x {:.6} MHz", to_mhz(worst));
    Ok(())
}

/// Waveforms plus ramp audit for every configured ramp time, both
/// protocols side by side.
pub fn cmd_ramp(config: &RunConfig, overrides: &Overrides) -> CliResult<()> {
    let dir = prepare_out_dir(config, overrides)?;
    let device = calibrate(config)?;
    let dressed = device.dressed();
    let j1_target = dressed.r1 * device.j_max();
    let mut audit = String::from(
        "protocol,T_ns,t_w_ns,Tg_ns,mu_mean,mu_rel_spread,invariant_defect,beta_plus_rad,beta_minus_rad\n",
    );
    for &t_ramp in &config.protocol.ramp_times_ns {
        for kind in [ProtocolKind::Faquad, ProtocolKind::Invariant] {
            let ramp = match synthesize_ramp(kind, device.alpha_eff(), j1_target, t_ramp) {
                Ok(r) => r,
                Err(e) => {
                    eprintln!("ramp {} T={t_ramp}: {e}", kind.name());
                    continue;
                }
            };
            let t_wait = match waiting_time(&ramp, &dressed) {
                Ok(t) => t,
                Err(e) => {
                    eprintln!("ramp {} T={t_ramp}: {e}", kind.name());
                    continue;
                }
            };
            let schedule = czpulse_core::pulse::build_schedule(ramp, t_wait, &dressed)?;

            // full-schedule waveform export
            let n = (schedule.t_gate() * config.output.samples_per_ns as f64).ceil() as usize;
            let mut wave = String::from("t_ns,J_over_2pi_GHz\n");
            for k in 0..=n {
                let t = schedule.t_gate() * k as f64 / n as f64;
                wave.push_str(&format!("{:.9},{:.12e}\n", t, to_ghz(schedule.j(t))));
            }
            let path = dir.join(format!("schedule_{}_T{}.csv", kind.name(), t_ramp));
            write_file(&path, &wave)?;

            // audit: adiabaticity statistics and, for the invariant ramp,
            // the invariant defect and Lewis-Riesenfeld phases
            let ramp = schedule.ramp();
            let mus: Vec<f64> = (0..=1000).map(|k| faquad_mu(ramp, t_ramp * k as f64 / 1000.0)).collect();
            let mu_mean = mus.iter().sum::<f64>() / mus.len() as f64;
            let mu_spread =
                mus.iter().map(|m| (m - mu_mean).abs()).fold(0.0, f64::max) / mu_mean.max(1e-300);
            let (defect, beta_plus, beta_minus) = match kind {
                ProtocolKind::Invariant => {
                    let ansatz =
                        invariant_ansatz(device.alpha_eff(), j1_target, t_ramp, RampDirection::Up)?;
                    let betas = lr_phases(&ansatz);
                    (
                        format!("{:.6e}", invariant_defect(&ansatz, 1000, 1e-5)),
                        format!("{:.9e}", betas.beta_plus),
                        format!("{:.9e}", betas.beta_minus),
                    )
                }
                ProtocolKind::Faquad => ("nan".into(), "nan".into(), "nan".into()),
            };
            audit.push_str(&format!(
                "{},{},{:.9},{:.9},{:.9e},{:.3e},{},{},{}\n",
                kind.name(),
                t_ramp,
                t_wait,
                schedule.t_gate(),
                mu_mean,
                mu_spread,
                defect,
                beta_plus,
                beta_minus
            ));
            println!(
                "ramp {} T={t_ramp}: t_w={:.4} ns, Tg={:.4} ns, mu={:.4e} (spread {:.1e}) -> {}",
                kind.name(),
                t_wait,
                schedule.t_gate(),
                mu_mean,
                mu_spread,
                path.display()
            );
        }
    }
    let audit_path = dir.join("ramp_audit.csv");
    write_file(&audit_path, &audit)?;
    println!("ramp: audit -> {}", audit_path.display());
    Ok(())
}

fn single_row(
    device: &DeviceSpec,
    protocol: ProtocolKind,
    t_ramp: f64,
    mode: SweepMode,
    config: &RunConfig,
) -> CliResult<SweepRow> {
    let cfg = config.propagation_config().map_err(CliError::Validation)?;
    let result = sweep(device, protocol, &[t_ramp], mode, &cfg, Some(1));
    match result.rows.into_iter().next() {
        Some(row) => Ok(row),
        None => Err(CliError::Numerical(
            result
                .failures
                .first()
                .map(|f| f.message.clone())
                .unwrap_or_else(|| "gate simulation produced no row".into()),
        )),
    }
}

/// One gate run at a single ramp time; writes `gate_report.csv`.
pub fn cmd_gate(config: &RunConfig, overrides: &Overrides) -> CliResult<()> {
    let device = calibrate(config)?;
    let protocol = match overrides.protocol {
        Some(p) => p,
        None => config.protocol_kind().map_err(CliError::Validation)?,
    };
    let mode = match overrides.mode {
        Some(m) => m,
        None => config.sweep_mode().map_err(CliError::Validation)?,
    };
    let t_ramp = overrides.ramp_time.unwrap_or(config.protocol.ramp_times_ns[0]);
    if !(t_ramp > 0.0) {
        return Err(CliError::Validation(format!("ramp time must be positive, got {t_ramp}")));
    }

    if overrides.seed_only {
        print_seeds(&device, protocol, &[t_ramp])?;
        return Ok(());
    }
    let dir = prepare_out_dir(config, overrides)?;

    let model = overrides.model.unwrap_or(GateModel::Full);
    let row = if model == GateModel::Full {
        single_row(&device, protocol, t_ramp, mode, config)?
    } else {
        // non-full models run uncorrected on the analytic schedule
        let schedule = build_protocol_schedule(&device, protocol, t_ramp)?;
        let cfg = config.propagation_config().map_err(CliError::Validation)?;
        let out = simulate_gate(&device, &schedule, model, &cfg)?;
        let (_, delta_seed) = seed_correction(&device, &schedule)?;
        SweepRow {
            t_ramp,
            t_wait: schedule.t_wait(),
            delta: device.delta(),
            t_gate: schedule.t_gate(),
            protocol,
            model,
            infidelity: out.infidelity(),
            phase_dev: out.phase_dev,
            loss: out.loss,
            leakage: out.leakage,
            delta_seed,
            stark_mean: mean_stark_shift(&device, &schedule)?,
            converged: true,
        }
    };
    let path = dir.join("gate_report.csv");
    write_file(&path, &format!("{CSV_HEADER}\n{}\n", row.csv_line()))?;
    println!(
        "gate {} {} model={}: T={} ns, t_w={:.4} ns, Tg={:.4} ns, Delta=2pi x {:.4} MHz",
        protocol.name(),
        mode.name(),
        row.model.name(),
        row.t_ramp,
        row.t_wait,
        row.t_gate,
        to_mhz(row.delta)
    );
    println!(
        "gate: infidelity={:.6e}, phase_dev={:+.6e} rad, leakage={:.3e}, loss=[{:.3e}, {:.3e}, {:.3e}, {:.3e}]",
        row.infidelity, row.phase_dev, row.leakage, row.loss[0], row.loss[1], row.loss[2], row.loss[3]
    );
    println!("gate: report -> {}", path.display());
    Ok(())
}

fn print_seeds(device: &DeviceSpec, protocol: ProtocolKind, t_ramps: &[f64]) -> CliResult<()> {
    println!("T_ns,t_w0_ns,Delta0_over_2pi_MHz");
    for &t_ramp in t_ramps {
        let schedule = build_protocol_schedule(device, protocol, t_ramp)?;
        let (t_w0, d0) = seed_correction(device, &schedule)?;
        println!("{t_ramp},{t_w0:.9},{:.9e}", to_mhz(d0));
    }
    Ok(())
}

/// Full sweep over the configured ramp times; writes
/// `sweep_<protocol>_<mode>.csv`.
pub fn cmd_sweep(config: &RunConfig, overrides: &Overrides) -> CliResult<()> {
    let device = calibrate(config)?;
    let protocol = match overrides.protocol {
        Some(p) => p,
        None => config.protocol_kind().map_err(CliError::Validation)?,
    };
    let mode = match overrides.mode {
        Some(m) => m,
        None => config.sweep_mode().map_err(CliError::Validation)?,
    };
    let t_ramps = &config.protocol.ramp_times_ns;

    if overrides.seed_only {
        print_seeds(&device, protocol, t_ramps)?;
        return Ok(());
    }
    let dir = prepare_out_dir(config, overrides)?;

    let cfg = config.propagation_config().map_err(CliError::Validation)?;
    let result = sweep(&device, protocol, t_ramps, mode, &cfg, overrides.workers);
    for f in &result.failures {
        eprintln!("sweep {} T={}: {}", protocol.name(), f.t_ramp, f.message);
    }
    if result.rows.is_empty() {
        return Err(CliError::Numerical("every sweep point failed".into()));
    }
    let path = dir.join(format!("sweep_{}_{}.csv", protocol.name(), mode.name()));
    write_file(&path, &to_csv(&result))?;
    let mut stdout = std::io::stdout().lock();
    for row in &result.rows {
        writeln!(
            stdout,
            "sweep {} {} T={:.2}: Tg={:.3} ns, infidelity={:.4e}, dev={:+.3e} rad, Delta=2pi x {:.4} MHz{}",
            protocol.name(),
            mode.name(),
            row.t_ramp,
            row.t_gate,
            row.infidelity,
            row.phase_dev,
            to_mhz(row.delta),
            if row.converged { "" } else { " [not converged]" }
        )?;
    }
    println!("sweep: {} rows -> {}", result.rows.len(), path.display());
    Ok(())
}
