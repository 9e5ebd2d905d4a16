//! Helpers shared by the command-line integration tests.
#![allow(dead_code)]

use std::path::Path;
use std::process::{Command, Output};

pub fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_patcharray"))
}

pub fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

pub fn code(out: &Output) -> i32 {
    out.status.code().unwrap_or(-1)
}

pub fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

/// Network data read from a Touchstone v1 file without using the crate's
/// own parsers.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    pub ports: usize,
    pub unit_scale: f64,
    pub format: String,
    pub z0: f64,
    /// (frequency in file units, row-major (a, b) pairs)
    pub points: Vec<(f64, Vec<(f64, f64)>)>,
}

pub fn read_touchstone(text: &str, ports: usize) -> Result<Network, String> {
    let mut option: Option<Vec<String>> = None;
    let mut numbers = Vec::new();
    for line in text.lines() {
        let line = line.split('!').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            if option.is_some() {
                return Err("second option line".into());
            }
            option = Some(rest.split_whitespace().map(|t| t.to_ascii_uppercase()).collect());
            continue;
        }
        if option.is_none() {
            return Err("data before option line".into());
        }
        for tok in line.split_whitespace() {
            numbers.push(tok.parse::<f64>().map_err(|e| format!("bad number {tok:?}: {e}"))?);
        }
    }
    let opt = option.ok_or("missing option line")?;
    let (mut scale, mut param, mut format, mut z0) = (1e9, "S".to_string(), "MA".to_string(), 50.0);
    let mut i = 0;
    while i < opt.len() {
        match opt[i].as_str() {
            "HZ" => scale = 1.0,
            "KHZ" => scale = 1e3,
            "MHZ" => scale = 1e6,
            "GHZ" => scale = 1e9,
            "S" | "Y" | "Z" | "H" | "G" => param = opt[i].clone(),
            "DB" | "MA" | "RI" => format = opt[i].clone(),
            "R" => {
                i += 1;
                z0 = opt.get(i).ok_or("R without value")?.parse().map_err(|_| "bad reference")?;
            }
            other => return Err(format!("unknown option token {other}")),
        }
        i += 1;
    }
    if param != "S" {
        return Err(format!("expected S parameters, got {param}"));
    }
    let per = 1 + 2 * ports * ports;
    if numbers.len() % per != 0 {
        return Err(format!("{} numbers is not a multiple of {per}", numbers.len()));
    }
    let points = numbers
        .chunks(per)
        .map(|c| (c[0], c[1..].chunks(2).map(|p| (p[0], p[1])).collect()))
        .collect::<Vec<_>>();
    if points.windows(2).any(|w| w[1].0 <= w[0].0) {
        return Err("frequencies not increasing".into());
    }
    Ok(Network { ports, unit_scale: scale, format, z0, points })
}

/// Touchstone text in the layout the tool emits: one matrix row per line.
pub fn write_touchstone(net: &Network) -> String {
    let unit = match net.unit_scale {
        s if s == 1e9 => "GHz",
        s if s == 1e6 => "MHz",
        s if s == 1e3 => "kHz",
        _ => "Hz",
    };
    let mut s = format!("# {unit} S {} R {}\n", net.format, net.z0);
    for (f, vals) in &net.points {
        for r in 0..net.ports {
            if r == 0 {
                s += &format!("{f:.9}");
            } else {
                s += &" ".repeat(11);
            }
            for c in 0..net.ports {
                let (a, b) = vals[r * net.ports + c];
                s += &format!(" {a:.12e} {b:.12e}");
            }
            s.push('\n');
        }
    }
    s
}

/// Complex S matrices of a real/imaginary network.
pub fn s_matrices(net: &Network) -> Vec<(f64, Vec<Vec<(f64, f64)>>)> {
    assert_eq!(net.format, "RI");
    net.points
        .iter()
        .map(|(f, v)| (*f, (0..net.ports).map(|r| v[r * net.ports..(r + 1) * net.ports].to_vec()).collect()))
        .collect()
}
