//! Trace export as CSV, one row per tick and agent, and the matching reader.
//!
//! Agent 0 is the leader; its row carries `v(t)` in the `eta_*` columns and
//! leaves every other series empty. Followers with fewer states, inputs or
//! measurements than the widest follower leave the surplus columns empty.
//! Numbers use 17 significant digits, which round-trips every `f64`.

use std::io::{Read, Write};

use coreg_core::sim::{AgentRecord, SimTrace, TickRecord};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Widths {
    x: usize,
    u: usize,
    e: usize,
    ym: usize,
    eta: usize,
}

impl Widths {
    fn of(trace: &SimTrace) -> Self {
        let mut w = Widths {
            x: 0,
            u: 0,
            e: 0,
            ym: 0,
            eta: 0,
        };
        for rec in &trace.ticks {
            w.eta = w.eta.max(rec.v.len());
            for a in &rec.agents {
                w.x = w.x.max(a.x.len());
                w.u = w.u.max(a.u.len());
                w.e = w.e.max(a.e.len());
                w.ym = w.ym.max(a.y_m.len());
            }
        }
        w
    }

    fn header(&self) -> Vec<String> {
        let mut h = vec!["t".to_string(), "agent_id".to_string()];
        let mut series = |name: &str, k: usize| {
            h.extend((1..=k).map(|i| format!("{name}_{i}")));
        };
        series("x", self.x);
        series("u", self.u);
        series("e", self.e);
        series("ym", self.ym);
        series("eta", self.eta);
        h.push("err_eta".into());
        h.push("err_S".into());
        h.push("reg_residual".into());
        let mut tail = (1..=self.x).map(|i| format!("xi_{i}")).collect();
        h.append(&mut tail);
        h
    }
}

pub fn format_number(v: f64) -> String {
    format!("{v:.16e}")
}

fn padded(values: &[f64], width: usize, out: &mut Vec<String>) {
    out.extend(values.iter().map(|&v| format_number(v)));
    out.extend(std::iter::repeat_n(String::new(), width - values.len()));
}

pub fn write_trace<W: Write>(trace: &SimTrace, sink: W) -> CliResult<()> {
    let widths = Widths::of(trace);
    let mut w = csv::Writer::from_writer(sink);
    let io = |e: csv::Error| CliError::io("trace", std::io::Error::other(e));
    w.write_record(widths.header()).map_err(io)?;
    for rec in &trace.ticks {
        let mut row = vec![rec.t.to_string(), "0".to_string()];
        padded(&[], widths.x + widths.u + widths.e + widths.ym, &mut row);
        padded(&rec.v, widths.eta, &mut row);
        padded(&[], 3 + widths.x, &mut row);
        w.write_record(&row).map_err(io)?;
        for (k, a) in rec.agents.iter().enumerate() {
            let mut row = vec![rec.t.to_string(), (k + 1).to_string()];
            padded(&a.x, widths.x, &mut row);
            padded(&a.u, widths.u, &mut row);
            padded(&a.e, widths.e, &mut row);
            padded(&a.y_m, widths.ym, &mut row);
            padded(&a.eta, widths.eta, &mut row);
            row.push(format_number(a.err_eta));
            row.push(format_number(a.err_s));
            row.push(format_number(a.reg_residual));
            padded(a.xi.as_deref().unwrap_or(&[]), widths.x, &mut row);
            w.write_record(&row).map_err(io)?;
        }
    }
    w.flush().map_err(|e| CliError::io("trace", e))?;
    Ok(())
}

pub fn trace_to_string(trace: &SimTrace) -> String {
    let mut buf = Vec::new();
    write_trace(trace, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("CSV is UTF-8")
}

/// Reads a trace written by [`write_trace`].
pub fn read_trace<R: Read>(source: R) -> CliResult<SimTrace> {
    let mut r = csv::Reader::from_reader(source);
    let bad = |line: usize, msg: String| CliError::input(format!("trace line {line}"), msg);
    let header = r.headers().map_err(|e| bad(1, e.to_string()))?.clone();
    let count = |prefix: &str| {
        header
            .iter()
            .filter(|h| {
                h.strip_prefix(prefix)
                    .and_then(|rest| rest.strip_prefix('_'))
                    .is_some_and(|n| n.parse::<usize>().is_ok())
            })
            .count()
    };
    let widths = Widths {
        x: count("x"),
        u: count("u"),
        e: count("e"),
        ym: count("ym"),
        eta: count("eta"),
    };
    if header.iter().collect::<Vec<_>>() != widths.header() {
        return Err(bad(1, "unexpected column layout".into()));
    }
    let mut ticks: Vec<TickRecord> = Vec::new();
    for (k, row) in r.records().enumerate() {
        let line = k + 2;
        let row = row.map_err(|e| bad(line, e.to_string()))?;
        let cells: Vec<&str> = row.iter().collect();
        let mut pos = 2;
        let mut take = |n: usize| -> CliResult<Vec<f64>> {
            let mut out = Vec::new();
            for cell in &cells[pos..pos + n] {
                if cell.is_empty() {
                    continue;
                }
                out.push(
                    cell.parse()
                        .map_err(|_| bad(line, format!("bad number {cell:?}")))?,
                );
            }
            pos += n;
            Ok(out)
        };
        let x = take(widths.x)?;
        let u = take(widths.u)?;
        let e = take(widths.e)?;
        let y_m = take(widths.ym)?;
        let eta = take(widths.eta)?;
        let errs = take(3)?;
        let xi = take(widths.x)?;
        let t: usize = cells[0].parse().map_err(|_| bad(line, "bad tick".into()))?;
        let agent: usize = cells[1]
            .parse()
            .map_err(|_| bad(line, "bad agent id".into()))?;
        if agent == 0 {
            ticks.push(TickRecord {
                t,
                v: eta,
                agents: Vec::new(),
            });
            continue;
        }
        let tick = ticks
            .last_mut()
            .filter(|rec| rec.t == t)
            .ok_or_else(|| bad(line, "follower row before its leader row".into()))?;
        if errs.len() != 3 {
            return Err(bad(line, "missing error columns".into()));
        }
        tick.agents.push(AgentRecord {
            x,
            u,
            e,
            y_m,
            eta,
            err_eta: errs[0],
            err_s: errs[1],
            reg_residual: errs[2],
            xi: if xi.is_empty() { None } else { Some(xi) },
        });
    }
    Ok(SimTrace { ticks })
}
