//! CSV tables, charts and the run manifest.

use std::path::{Path, PathBuf};

use serde_json::{json, Map, Value};

use super::config::RunConfig;
use super::svg::{Chart, Series};
use crate::channel::{distance_to_bs, drop_users, path_loss, ChannelError};
use crate::experiment::{FrontierResult, PowerSweep, CONSUMED_POWER_SCOPE};

pub const FRONTIER_HEADER: [&str; 8] = [
    "arch",
    "strategy",
    "streams",
    "radiated_dbm",
    "mean_tput_bps",
    "consumed_w",
    "ee_bits_per_joule",
    "n_drops_ok",
];
pub const POWER_HEADER: [&str; 6] = ["arch", "device", "n_antennas", "n_rf", "component", "mw"];
pub const DROP_HEADER: [&str; 6] = ["user_id", "x", "y", "z", "distance_m", "pathloss_db"];
pub const CROSSOVER_HEADER: [&str; 3] = ["arch", "device", "n_antennas"];

/// Shortest decimal text that parses back to the same `f64`.
fn num(v: f64) -> String {
    format!("{v}")
}

fn table<I>(header: &[&str], rows: I) -> String
where
    I: IntoIterator<Item = Vec<String>>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    // writing to a Vec cannot fail
    w.write_record(header).expect("in-memory csv");
    for row in rows {
        w.write_record(&row).expect("in-memory csv");
    }
    String::from_utf8(w.into_inner().expect("in-memory csv")).expect("csv output is utf-8")
}

/// User positions and path loss of one drop.
pub fn drop_csv(cfg: &RunConfig, seed: u64) -> Result<String, ChannelError> {
    let sc = &cfg.experiment.scenario;
    let users = drop_users(sc, seed)?;
    let rows = users
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let d = distance_to_bs(sc, *p);
            let pl = path_loss(d, sc.carrier_frequency, sc.pathloss_exponent)?;
            Ok(vec![i.to_string(), num(p[0]), num(p[1]), num(p[2]), num(d), num(pl)])
        })
        .collect::<Result<Vec<_>, ChannelError>>()?;
    Ok(table(&DROP_HEADER, rows))
}

pub fn frontier_csv(result: &FrontierResult) -> String {
    let rows = result.curves.iter().flat_map(|c| {
        c.points.iter().map(move |p| {
            vec![
                c.arch.kind.as_str().to_string(),
                c.arch.strategy.as_str().to_string(),
                c.arch.streams_per_user.to_string(),
                num(p.radiated_dbm),
                num(p.mean_throughput),
                num(p.total_consumed_power),
                num(p.energy_efficiency),
                c.n_drops_ok.to_string(),
            ]
        })
    });
    table(&FRONTIER_HEADER, rows)
}

/// One row per component, then `tx_total`, `rx_total` and `total` rows.
pub fn power_sweep_csv(sweeps: &[PowerSweep]) -> String {
    let rows = sweeps.iter().flat_map(|s| &s.rows).flat_map(|r| {
        let key = [
            r.kind.as_str().to_string(),
            r.device.as_str().to_string(),
            r.n_antennas.to_string(),
            r.n_rf.to_string(),
        ];
        let b = &r.breakdown;
        let items = b.items.iter().map(|i| (i.component, i.total_mw));
        let totals = [("tx_total", b.tx_total), ("rx_total", b.rx_total), ("total", b.total())];
        items
            .chain(totals)
            .map(move |(name, mw)| {
                let mut row = key.to_vec();
                row.push(name.to_string());
                row.push(num(mw));
                row
            })
            .collect::<Vec<_>>()
    });
    table(&POWER_HEADER, rows)
}

/// Antenna count where RX power first exceeds TX power; empty if never.
pub fn crossovers_csv(sweeps: &[PowerSweep]) -> String {
    let rows = sweeps.iter().flat_map(|s| &s.crossovers).map(|c| {
        vec![
            c.kind.as_str().to_string(),
            c.device.as_str().to_string(),
            c.n_antennas.map_or_else(String::new, |n| n.to_string()),
        ]
    });
    table(&CROSSOVER_HEADER, rows)
}

pub fn frontier_chart(result: &FrontierResult) -> Chart {
    Chart {
        title: "Energy efficiency vs throughput".into(),
        x_label: "mean sum throughput [bit/s]".into(),
        y_label: "energy efficiency [bit/J]".into(),
        x_log: true,
        y_log: true,
        series: result
            .curves
            .iter()
            .map(|c| Series {
                name: format!("{} x{}", c.arch.label(), c.arch.streams_per_user),
                points: c
                    .points
                    .iter()
                    .map(|p| (p.mean_throughput, p.energy_efficiency))
                    .collect(),
            })
            .collect(),
    }
}

pub fn power_chart(sweeps: &[PowerSweep]) -> Chart {
    let mut series = Vec::new();
    for sweep in sweeps {
        for c in &sweep.crossovers {
            let rows: Vec<_> = sweep
                .rows
                .iter()
                .filter(|r| r.kind == c.kind && r.device == c.device)
                .collect();
            for (side, pick) in [("tx", true), ("rx", false)] {
                series.push(Series {
                    name: format!("{} {} {side}", c.device, c.kind),
                    points: rows
                        .iter()
                        .map(|r| {
                            let b = &r.breakdown;
                            (r.n_antennas as f64, if pick { b.tx_total } else { b.rx_total })
                        })
                        .collect(),
                });
            }
        }
    }
    Chart {
        title: "Transceiver power vs number of antennas".into(),
        x_label: "antennas".into(),
        y_label: "power [mW]".into(),
        x_log: true,
        y_log: true,
        series,
    }
}

pub struct ManifestInfo<'a> {
    pub command: &'a str,
    pub config: &'a RunConfig,
    pub outputs: &'a [PathBuf],
    pub threads: Option<usize>,
    pub duration_s: f64,
    pub extra: Map<String, Value>,
}

pub fn manifest(info: &ManifestInfo) -> Value {
    let config: Map<String, Value> = info
        .config
        .pairs()
        .into_iter()
        .map(|(k, v)| (k.to_string(), Value::String(v)))
        .collect();
    let mut m = json!({
        "tool": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "command": info.command,
        "preset": info.config.preset,
        "master_seed": info.config.experiment.master_seed,
        "config": config,
        "outputs": info.outputs.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
        "threads": info.threads,
        "wall_clock_s": info.duration_s,
        "consumed_power_scope": CONSUMED_POWER_SCOPE,
    });
    if let Value::Object(obj) = &mut m {
        obj.extend(info.extra.clone());
    }
    m
}

pub fn write(dir: &Path, name: &str, contents: &str) -> std::io::Result<PathBuf> {
    let path = dir.join(name);
    std::fs::write(&path, contents)?;
    Ok(path)
}
