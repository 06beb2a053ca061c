//! Scenario commands. Validation uses `!(x > 0.0)` so NaN inputs are rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use ionmod_core::dynamics::{
    extinction_from_pi_times, lag1_autocorrelation, omega_from_pi_time, pulse_energy_histogram, rabi_flop,
    rabi_rate_from_power, sample_std, write_histogram_csv,
};
use ionmod_core::photonics::{db_to_power, format_sig9, optimize_extinction, transmission_map, VoltageRange};
use ionmod_core::tomography::{
    fit_physical_gst, fit_standard_gst, make_design, report_metrics, simulate_dataset, FitReport, PhysicalFitOptions,
    SimulationOptions, StandardFitOptions,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::{FitKind, ScenarioConfig};
use crate::Failure;

pub const VERSION: &str = concat!("ionmod ", env!("CARGO_PKG_VERSION"));

fn write_with<F>(dir: &Path, name: &str, f: F) -> Result<(), Failure>
where
    F: FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
{
    let path = dir.join(name);
    let file = File::create(&path).map_err(|e| Failure::io(&path, e))?;
    let mut w = BufWriter::new(file);
    f(&mut w).and_then(|_| w.flush()).map_err(|e| Failure::io(&path, e))
}

fn write_text(dir: &Path, name: &str, text: &str) -> Result<(), Failure> {
    write_with(dir, name, |w| w.write_all(text.as_bytes()))
}

/// Creates the output directory and writes the config echo and version.
pub fn prepare(cfg: &ScenarioConfig, command: &str) -> Result<(), Failure> {
    fs::create_dir_all(&cfg.out).map_err(|e| Failure::io(&cfg.out, e))?;
    let echo = format!("# {VERSION}\n# command = {command}\n{}", cfg.to_toml());
    write_text(&cfg.out, "config.resolved.toml", &echo)?;
    write_text(&cfg.out, "VERSION", &format!("{VERSION}\n"))
}

pub fn map(cfg: &ScenarioConfig) -> Result<(), Failure> {
    let dev = cfg.device.spec();
    dev.validate()?;
    let v1 = cfg.map.v1.values().map_err(Failure::Config)?;
    let v2 = cfg.map.v2.values().map_err(Failure::Config)?;
    let map = transmission_map(&dev, &v1, &v2)?;
    let dir = &cfg.out;
    write_with(dir, "transmission_map.csv", |w| map.write_csv(w))?;
    write_with(dir, "rabi_contours.csv", |w| map.write_contour_csv(w))?;

    let mut summary = String::new();
    let _ = writeln!(summary, "peak_power = {}", format_sig9(map.peak_power));
    let _ = writeln!(summary, "normalized_min = {}", format_sig9(map.min()));
    let _ = writeln!(summary, "normalized_max = {}", format_sig9(map.max()));
    if cfg.map.extinction && v1.len() > 1 && v2.len() > 1 {
        let range = VoltageRange {
            v1: (cfg.map.v1.min, cfg.map.v1.max),
            v2: (cfg.map.v2.min, cfg.map.v2.max),
        };
        let ext = optimize_extinction(&dev, range)?;
        let _ = writeln!(
            summary,
            "v_on = {} {}",
            format_sig9(ext.v_on.0),
            format_sig9(ext.v_on.1)
        );
        let _ = writeln!(
            summary,
            "v_off = {} {}",
            format_sig9(ext.v_off.0),
            format_sig9(ext.v_off.1)
        );
        let _ = writeln!(summary, "power_on = {}", format_sig9(ext.power_on));
        let _ = writeln!(summary, "power_off = {}", format_sig9(ext.power_off));
        let _ = writeln!(summary, "extinction_db = {:.4}", ext.extinction_db);
        let _ = writeln!(summary, "extinction_capped = {}", ext.capped);
        println!(
            "extinction {:.2} dB{}",
            ext.extinction_db,
            if ext.capped { " (capped)" } else { "" }
        );
    }
    write_text(dir, "map_summary.txt", &summary)?;
    println!("map {}x{} min {:.3e}", v1.len(), v2.len(), map.min());
    Ok(())
}

pub fn rabi(cfg: &ScenarioConfig) -> Result<(), Failure> {
    let r = &cfg.rabi;
    if !(r.t_pi_on_us > 0.0) || !(r.extinction_db >= 0.0) {
        return Err(Failure::Config(
            "rabi: t_pi_on_us must be positive and extinction_db ≥ 0".into(),
        ));
    }
    let durations = r.durations.values().map_err(Failure::Config)?;
    let omega_on = omega_from_pi_time(r.t_pi_on_us);
    let omega_off = rabi_rate_from_power(db_to_power(r.extinction_db), omega_on)?;
    let on = rabi_flop(omega_on, &durations);
    let off = rabi_flop(omega_off, &durations);

    let mut csv = String::from("duration_us,p_on,p_off\n");
    for ((t, a), b) in durations.iter().zip(&on).zip(&off) {
        let _ = writeln!(csv, "{},{},{}", format_sig9(*t), format_sig9(*a), format_sig9(*b));
    }
    write_text(&cfg.out, "rabi.csv", &csv)?;

    let t_off = if omega_off > 0.0 {
        omega_from_pi_time(omega_off)
    } else {
        f64::INFINITY
    };
    let ratio = t_off / r.t_pi_on_us;
    let mut summary = String::new();
    let _ = writeln!(summary, "t_pi_on_us = {}", format_sig9(r.t_pi_on_us));
    let _ = writeln!(summary, "t_pi_off_us = {}", format_sig9(t_off));
    let _ = writeln!(summary, "pi_time_ratio = {}", format_sig9(ratio));
    let _ = writeln!(
        summary,
        "extinction_db_from_pi_times = {:.4}",
        extinction_from_pi_times(r.t_pi_on_us, t_off)
    );
    write_text(&cfg.out, "rabi_summary.txt", &summary)?;
    println!("pi-time ratio {ratio:.2} (t_pi_off {t_off:.1} us)");
    Ok(())
}

pub fn hist(cfg: &ScenarioConfig) -> Result<(), Failure> {
    let h = &cfg.hist;
    if !(h.period_us >= 0.0) {
        return Err(Failure::Config("hist: period_us must be ≥ 0".into()));
    }
    let pulse = h.pulse();
    let noise = cfg.noise.model();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let samples = pulse_energy_histogram(h.pulses, &pulse, &noise, h.period_us, &mut rng)?;
    write_with(&cfg.out, "pulse_energies.csv", |w| {
        write_histogram_csv(w, &samples, cfg.seed, &pulse, &noise)
    })?;

    let mean = samples.iter().sum::<f64>() / samples.len() as f64;
    let std = if samples.len() > 1 { sample_std(&samples) } else { 0.0 };
    let lag1 = if samples.len() > 1 && std > 0.0 {
        lag1_autocorrelation(&samples)
    } else {
        0.0
    };
    let summary = format!(
        "pulses = {}\nmean = {}\nstd = {}\nlag1_autocorrelation = {}\n",
        samples.len(),
        format_sig9(mean),
        format_sig9(std),
        format_sig9(lag1)
    );
    write_text(&cfg.out, "hist_summary.txt", &summary)?;
    println!("pulses {} std {:.4} lag1 {:.3}", samples.len(), std, lag1);
    Ok(())
}

fn write_fit(cfg: &ScenarioConfig, fit: &FitReport) -> Result<(), Failure> {
    let kind = fit.kind();
    write_with(&cfg.out, &format!("fit_{kind}.txt"), |w| fit.write_text(w))?;
    write_with(&cfg.out, &format!("metrics_{kind}.csv"), |w| fit.write_metrics_csv(w))?;
    let pm = |s: f64| {
        if s.is_finite() {
            format!(" ± {s:.1e}")
        } else {
            String::new()
        }
    };
    for row in report_metrics(fit) {
        println!(
            "{kind:>8} {:>6}  infidelity {:.3e}{}  diamond {:.3e}{}",
            row.label,
            row.process_infidelity,
            pm(row.infidelity_sigma),
            row.diamond_error,
            pm(row.diamond_sigma)
        );
    }
    Ok(())
}

pub fn gst(cfg: &ScenarioConfig) -> Result<(), Failure> {
    let g = &cfg.gst;
    let design = make_design(g.max_power);
    let opts = SimulationOptions {
        shots: g.shots,
        infinite_shots: g.infinite_shots,
        readout_error: g.readout_error,
        shot_overhead: g.shot_overhead_us,
        timestamp: None,
    };
    let data = simulate_dataset(&design, &cfg.truth(), &opts, cfg.seed)?;
    write_with(&cfg.out, "dataset.txt", |w| data.write(w))?;
    println!("simulated {} sequences", data.records.len());

    for kind in &g.fits {
        let fit = match kind {
            FitKind::Standard => {
                let mut opts = StandardFitOptions::default();
                if let Some(n) = g.max_iterations {
                    opts.max_iter = n;
                }
                fit_standard_gst(&data, &opts)
            }
            FitKind::Physical => {
                let mut opts = PhysicalFitOptions {
                    intervals: g.intervals,
                    ..Default::default()
                };
                if let Some(n) = g.max_iterations {
                    opts.max_iter = n;
                }
                fit_physical_gst(&data, &opts)
            }
        }
        .map_err(Failure::fit)?;
        write_fit(cfg, &fit)?;
    }
    Ok(())
}
