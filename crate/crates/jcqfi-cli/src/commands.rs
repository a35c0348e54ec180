//! Table-producing subcommands. Grid points run on the rayon pool and are
//! collected in grid order, so output never depends on scheduling.

use std::sync::atomic::{AtomicUsize, Ordering};

use jcqfi::bloch::{fi_population, purity, qfi_bloch, BlochState};
use jcqfi::collision::{composed_qfi, qfi_n_closed};
use jcqfi::fock::choose_cutoff;
use jcqfi::jc_channel::JcChannel;
use jcqfi::limits::vacuum_state;
use jcqfi::lindblad::{max_qfi, qfi_lindblad, qfi_rate, steady_qfi};
use rayon::prelude::*;

use crate::config::{Initial, Range, Spacing, SweepConfig};
use crate::error::CliError;
use crate::output::{Cell, Table};

pub const SCAN_COLUMNS: [&str; 8] = ["alpha", "tau", "initial", "x", "z", "purity", "qfi", "fi_z"];
pub const COLLISION_COLUMNS: [&str; 4] = ["N", "tau", "qfi_numeric", "qfi_closed"];
pub const LINDBLAD_COLUMNS: [&str; 8] =
    ["eps_bar", "initial", "s_star_maxqfi", "max_qfi", "max_qfi_interior", "s_star_rate", "rate", "steady_qfi"];
pub const TRAJECTORY_COLUMNS: [&str; 4] = ["eps_bar", "initial", "s", "qfi"];

/// Counts finished work items and reports every tenth of the total on stderr.
struct Progress<'a> {
    label: &'a str,
    total: usize,
    done: AtomicUsize,
    quiet: bool,
}

impl<'a> Progress<'a> {
    fn new(label: &'a str, total: usize, quiet: bool) -> Self {
        Self { label, total, done: AtomicUsize::new(0), quiet }
    }

    fn tick(&self) {
        let k = self.done.fetch_add(1, Ordering::Relaxed) + 1;
        if self.quiet || self.total < 20 {
            return;
        }
        let step = self.total.div_ceil(10);
        if k % step == 0 || k == self.total {
            eprintln!("{}: {}/{}", self.label, k, self.total);
        }
    }
}

/// One evaluated grid point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointValues {
    pub x: f64,
    pub z: f64,
    pub purity: f64,
    pub qfi: f64,
    pub fi_z: f64,
}

fn channel_for(alpha: f64, tail_tol: f64) -> Option<JcChannel> {
    (alpha > 0.0).then(|| JcChannel::new(alpha, choose_cutoff(alpha, tail_tol)))
}

/// Evaluates one point. Failed quantities are reported as NaN.
pub fn evaluate(alpha: f64, tau: f64, initial: &BlochState, channel: Option<&JcChannel>) -> PointValues {
    let state = match channel {
        // At alpha = 0 the expansion about the vacuum is exact and carries both derivatives.
        None => Ok(vacuum_state(tau, alpha, initial).state),
        Some(ch) => ch.evolve(tau, initial),
    };
    let Ok(s) = state else {
        return PointValues { x: f64::NAN, z: f64::NAN, purity: f64::NAN, qfi: f64::NAN, fi_z: f64::NAN };
    };
    let qfi = match (qfi_bloch(&s), channel) {
        (Ok(q), _) => Ok(q),
        (Err(_), Some(ch)) => ch.qfi(tau, initial),
        (Err(e), None) => Err(e),
    };
    let fi_z = s.dr.map_or(f64::NAN, |d| fi_population(s.z(), d.z).unwrap_or(f64::NAN));
    PointValues { x: s.x(), z: s.z(), purity: purity(&s), qfi: qfi.unwrap_or(f64::NAN), fi_z }
}

fn grid_table(cfg: &SweepConfig, alphas: &[f64], taus: &[f64], label: &str) -> Table {
    let progress = Progress::new(label, alphas.len() * taus.len(), cfg.quiet);
    let channels: Vec<Option<JcChannel>> = alphas.par_iter().map(|&a| channel_for(a, cfg.tail_tol)).collect();
    let pairs: Vec<(usize, usize)> = (0..alphas.len()).flat_map(|i| (0..taus.len()).map(move |j| (i, j))).collect();
    let initials: Vec<(Initial, BlochState)> = cfg.initials.iter().map(|i| (*i, i.state())).collect();
    let blocks: Vec<Vec<Vec<Cell>>> = pairs
        .par_iter()
        .map(|&(i, j)| {
            let rows = initials
                .iter()
                .map(|(init, state)| {
                    let p = evaluate(alphas[i], taus[j], state, channels[i].as_ref());
                    vec![
                        Cell::Num(alphas[i]),
                        Cell::Num(taus[j]),
                        Cell::Text(init.label()),
                        Cell::Num(p.x),
                        Cell::Num(p.z),
                        Cell::Num(p.purity),
                        Cell::Num(p.qfi),
                        Cell::Num(p.fi_z),
                    ]
                })
                .collect();
            progress.tick();
            rows
        })
        .collect();
    let mut table = Table::new(SCAN_COLUMNS.to_vec());
    blocks.into_iter().flatten().for_each(|r| table.push(r));
    table
}

/// Alpha x tau grid, alpha outer.
pub fn run_scan(cfg: &SweepConfig) -> Result<Table, CliError> {
    let alphas = cfg.alpha_range.unwrap_or(Range { min: 0.0, max: 10.0, count: 101 }).linear();
    let taus = cfg.tau_range.unwrap_or(Range { min: 0.0, max: 50.0, count: 101 }).linear();
    Ok(grid_table(cfg, &alphas, &taus, "scan"))
}

/// Alpha cut at fixed tau when `--alpha` has several points, otherwise a tau
/// cut at fixed alpha (100 by default) spanning the short-time peak, the
/// revivals, tau = 4 alpha^2 and the late revivals.
pub fn run_slice(cfg: &SweepConfig, spacing: Spacing) -> Result<Table, CliError> {
    let alpha_sweep = cfg.alpha_range.is_some_and(|r| r.count > 1);
    let (alphas, taus) = if alpha_sweep {
        let tau = cfg.tau_range.unwrap_or(Range::point(1.0));
        if tau.count != 1 {
            return Err(CliError::Usage("slice takes a range in alpha or in tau, not both".into()));
        }
        (cfg.alpha_range.unwrap().linear(), tau.linear())
    } else {
        let alpha = cfg.alpha_range.unwrap_or(Range::point(100.0));
        let default = match spacing {
            Spacing::Log => Range { min: 0.1, max: 3e7, count: 2001 },
            Spacing::Linear => Range { min: 0.0, max: 50.0, count: 1001 },
        };
        let tau = cfg.tau_range.unwrap_or(default);
        let taus = match spacing {
            Spacing::Log => tau.log()?,
            Spacing::Linear => tau.linear(),
        };
        (alpha.linear(), taus)
    };
    Ok(grid_table(cfg, &alphas, &taus, "slice"))
}

/// Composed QFI after 1..=steps fresh interactions next to the closed form.
/// Uses the first configured initial state (ground by default).
pub fn run_collision(cfg: &SweepConfig, steps: usize) -> Result<Table, CliError> {
    if steps == 0 {
        return Err(CliError::Usage("--steps must be at least 1".into()));
    }
    let alpha = cfg.alpha_range.unwrap_or(Range::point(50.0));
    if alpha.count != 1 {
        return Err(CliError::Usage("collision takes a single --alpha value".into()));
    }
    let alpha = alpha.min;
    let taus = cfg.tau_range.unwrap_or(Range { min: 0.0, max: 1.0, count: 301 }).linear();
    let initial = cfg.initials[0].state();
    let pairs: Vec<(usize, f64)> = (1..=steps).flat_map(|n| taus.iter().map(move |&t| (n, t))).collect();
    let progress = Progress::new("collision", pairs.len(), cfg.quiet);
    let rows: Vec<Vec<Cell>> = pairs
        .par_iter()
        .map(|&(n, tau)| {
            let numeric = composed_qfi(alpha, tau, n, &initial).unwrap_or(f64::NAN);
            progress.tick();
            vec![Cell::Int(n as u64), Cell::Num(tau), Cell::Num(numeric), Cell::Num(qfi_n_closed(tau, n))]
        })
        .collect();
    let mut table = Table::new(COLLISION_COLUMNS.to_vec());
    rows.into_iter().for_each(|r| table.push(r));
    Ok(table)
}

/// Optimal QFI and rate per field strength. With `--s`, emits the QFI
/// trajectory on that grid instead.
pub fn run_lindblad(cfg: &SweepConfig) -> Result<Table, CliError> {
    let eps = cfg.eps_bar_range.unwrap_or(Range { min: 0.0, max: 10.0, count: 41 }).linear();
    let initials: Vec<(Initial, BlochState)> = cfg.initials.iter().map(|i| (*i, i.state())).collect();
    let cases: Vec<(f64, usize)> = eps.iter().flat_map(|&e| (0..initials.len()).map(move |k| (e, k))).collect();
    let progress = Progress::new("lindblad", cases.len(), cfg.quiet);
    if let Some(s_range) = cfg.s_range {
        let s_grid = s_range.linear();
        let blocks: Vec<Vec<Vec<Cell>>> = cases
            .par_iter()
            .map(|&(e, k)| {
                let (init, state) = &initials[k];
                let rows = s_grid
                    .iter()
                    .map(|&s| {
                        let q = qfi_lindblad(e, s, state).unwrap_or(f64::NAN);
                        vec![Cell::Num(e), Cell::Text(init.label()), Cell::Num(s), Cell::Num(q)]
                    })
                    .collect();
                progress.tick();
                rows
            })
            .collect();
        let mut table = Table::new(TRAJECTORY_COLUMNS.to_vec());
        blocks.into_iter().flatten().for_each(|r| table.push(r));
        return Ok(table);
    }
    let rows: Vec<Vec<Cell>> = cases
        .par_iter()
        .map(|&(e, k)| {
            let (init, state) = &initials[k];
            let best = max_qfi(e, state);
            let rate = qfi_rate(e, state);
            progress.tick();
            vec![
                Cell::Num(e),
                Cell::Text(init.label()),
                Cell::Num(best.s),
                Cell::Num(best.value),
                Cell::Flag(best.interior),
                Cell::Num(rate.s),
                Cell::Num(rate.value),
                Cell::Num(steady_qfi(e)),
            ]
        })
        .collect();
    let mut table = Table::new(LINDBLAD_COLUMNS.to_vec());
    rows.into_iter().for_each(|r| table.push(r));
    Ok(table)
}
