//! CSV table I/O: comma-separated, mandatory header row, full-precision
//! numeric cells, optional leading `#` comment lines. Every table written
//! here re-parses to exactly the in-memory values.

use mmhedge_core::PolicyTable;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::CliError;

/// Full-precision cell format: 17 significant digits, which round-trips
/// every finite `f64` exactly. `NaN` marks an absent value and is written
/// as an empty cell.
pub fn format_float(x: f64) -> String {
    if x.is_nan() {
        String::new()
    } else {
        format!("{x:.16e}")
    }
}

/// Inverse of [`format_float`]: empty cells read back as `NaN`.
pub fn parse_float(cell: &str) -> Result<f64, CliError> {
    if cell.is_empty() {
        return Ok(f64::NAN);
    }
    cell.parse()
        .map_err(|_| CliError::Table(format!("malformed numeric cell {cell:?}")))
}

/// Writes one table: `# `-prefixed comment lines, then the header, then
/// the rows.
pub fn write_table(
    path: &Path,
    comments: &[String],
    header: &[&str],
    rows: &[Vec<String>],
) -> Result<(), CliError> {
    let mut buf = BufWriter::new(File::create(path)?);
    for comment in comments {
        writeln!(buf, "# {comment}")?;
    }
    let mut writer = csv::Writer::from_writer(buf);
    writer.write_record(header)?;
    for row in rows {
        writer.write_record(row)?;
    }
    writer.flush()?;
    Ok(())
}

/// Reads one table back, skipping comment lines: (header, rows).
pub fn read_table(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>), CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)?;
    let header = reader.headers()?.iter().map(String::from).collect();
    let rows = reader
        .records()
        .map(|rec| rec.map(|r| r.iter().map(String::from).collect()))
        .collect::<Result<Vec<Vec<String>>, _>>()?;
    Ok((header, rows))
}

/// Serializes a policy as its own table: one `rate` row per node (empty
/// size cell) plus one `bid` and one `ask` row per node and size bucket,
/// absent quotes as empty cells.
pub fn policy_rows(policy: &PolicyTable) -> Vec<Vec<String>> {
    let mut rows = Vec::new();
    for (i, &q) in policy.q_nodes().iter().enumerate() {
        for (k, &z) in policy.sizes().iter().enumerate() {
            rows.push(vec![
                format_float(q),
                "bid".into(),
                format_float(z),
                format_float(policy.bid_quote(i, k)),
            ]);
            rows.push(vec![
                format_float(q),
                "ask".into(),
                format_float(z),
                format_float(policy.ask_quote(i, k)),
            ]);
        }
        rows.push(vec![
            format_float(q),
            "rate".into(),
            String::new(),
            format_float(policy.exec_rate(i)),
        ]);
    }
    rows
}

/// Rebuilds a [`PolicyTable`] from a table written by [`policy_rows`].
pub fn read_policy(path: &Path) -> Result<PolicyTable, CliError> {
    let (header, rows) = read_table(path)?;
    if header != ["q", "kind", "size", "value"] {
        return Err(CliError::Table(format!(
            "policy table must have columns q,kind,size,value, found {header:?}"
        )));
    }
    let mut nodes: Vec<f64> = Vec::new();
    let mut sizes: Vec<f64> = Vec::new();
    let mut bids: Vec<(u64, u64, f64)> = Vec::new();
    let mut asks: Vec<(u64, u64, f64)> = Vec::new();
    let mut rates: Vec<(u64, f64)> = Vec::new();
    for (line, row) in rows.iter().enumerate() {
        if row.len() != 4 {
            return Err(CliError::Table(format!("policy row {line}: expected 4 cells")));
        }
        let q = parse_float(&row[0])?;
        if q.is_nan() {
            return Err(CliError::Table(format!("policy row {line}: missing inventory")));
        }
        if !nodes.contains(&q) {
            nodes.push(q);
        }
        match row[1].as_str() {
            "rate" => rates.push((q.to_bits(), parse_float(&row[3])?)),
            side @ ("bid" | "ask") => {
                let z = parse_float(&row[2])?;
                if z.is_nan() {
                    return Err(CliError::Table(format!("policy row {line}: missing size")));
                }
                if !sizes.contains(&z) {
                    sizes.push(z);
                }
                let entry = (q.to_bits(), z.to_bits(), parse_float(&row[3])?);
                if side == "bid" {
                    bids.push(entry);
                } else {
                    asks.push(entry);
                }
            }
            other => {
                return Err(CliError::Table(format!("policy row {line}: unknown kind {other:?}")))
            }
        }
    }
    nodes.sort_by(f64::total_cmp);
    sizes.sort_by(f64::total_cmp);
    let lookup = |entries: &[(u64, u64, f64)], q: f64, z: f64| -> Result<f64, CliError> {
        let hits: Vec<f64> = entries
            .iter()
            .filter(|(qb, zb, _)| *qb == q.to_bits() && *zb == z.to_bits())
            .map(|(_, _, v)| *v)
            .collect();
        match hits.len() {
            1 => Ok(hits[0]),
            0 => Err(CliError::Table(format!("policy table misses a quote at q={q}, size={z}"))),
            _ => Err(CliError::Table(format!("policy table duplicates a quote at q={q}, size={z}"))),
        }
    };
    let mut bid_quotes = Vec::with_capacity(nodes.len());
    let mut ask_quotes = Vec::with_capacity(nodes.len());
    let mut exec_rate = Vec::with_capacity(nodes.len());
    for &q in &nodes {
        let rate_hits: Vec<f64> = rates
            .iter()
            .filter(|(qb, _)| *qb == q.to_bits())
            .map(|(_, v)| *v)
            .collect();
        if rate_hits.len() != 1 {
            return Err(CliError::Table(format!(
                "policy table needs exactly one rate row at q={q}, found {}",
                rate_hits.len()
            )));
        }
        exec_rate.push(rate_hits[0]);
        let mut brow = Vec::with_capacity(sizes.len());
        let mut arow = Vec::with_capacity(sizes.len());
        for &z in &sizes {
            brow.push(lookup(&bids, q, z)?);
            arow.push(lookup(&asks, q, z)?);
        }
        bid_quotes.push(brow);
        ask_quotes.push(arow);
    }
    PolicyTable::from_parts(0.0, nodes, sizes, bid_quotes, ask_quotes, exec_rate)
        .map_err(|e| CliError::Table(format!("policy table rejected: {e}")))
}
