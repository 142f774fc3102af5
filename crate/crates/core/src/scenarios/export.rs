use crate::engine::SimResult;
use crate::error::Result;
use std::path::Path;

/// Column names: `t`, then `v<bus>_mag`, `v<bus>_ang` per bus (1-based), then
/// `<device>_p`, `_q`, `_freq`, `_delta`, `_online` per device.
pub fn csv_header(result: &SimResult) -> Vec<String> {
    let mut h = vec!["t".to_string()];
    for b in 0..result.n_bus() {
        h.push(format!("v{}_mag", b + 1));
        h.push(format!("v{}_ang", b + 1));
    }
    for d in &result.devices {
        for q in ["p", "q", "freq", "delta", "online"] {
            h.push(format!("{}_{q}", d.name));
        }
    }
    h
}

pub fn write_csv<W: std::io::Write>(result: &SimResult, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(csv_header(result))?;
    let mut row = Vec::new();
    for k in 0..result.len() {
        row.clear();
        row.push(result.t[k].to_string());
        for b in 0..result.n_bus() {
            row.push(result.v_mag[b][k].to_string());
            row.push(result.v_ang[b][k].to_string());
        }
        for d in &result.devices {
            row.push(d.p[k].to_string());
            row.push(d.q[k].to_string());
            row.push(d.freq[k].to_string());
            row.push(d.delta[k].to_string());
            row.push(if d.online[k] { "1" } else { "0" }.to_string());
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes the decimated time series to `path`.
pub fn export_csv(result: &SimResult, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_csv(result, std::io::BufWriter::new(file))
}
