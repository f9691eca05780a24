//! CSV series from JSON reports, chosen by each report's `kind`.

use anyhow::{anyhow, bail, Context, Result};
use serde_json::Value;

use crate::output::{csv, read_text, write_bytes};
use crate::{Failure, Global, ReportArgs};

fn numbers(v: &Value, key: &str) -> Result<Vec<f64>> {
    v.get(key)
        .and_then(Value::as_array)
        .ok_or_else(|| anyhow!("missing array `{key}`"))?
        .iter()
        .map(|x| x.as_f64().ok_or_else(|| anyhow!("non-numeric entry in `{key}`")))
        .collect()
}

fn num(v: &Value, key: &str) -> Result<f64> {
    v.get(key).and_then(Value::as_f64).ok_or_else(|| anyhow!("missing number `{key}`"))
}

fn emit(report: &Value) -> Result<Vec<(&'static str, String)>> {
    let kind = report.get("kind").and_then(Value::as_str).unwrap_or("");
    Ok(match kind {
        "solve" => {
            let history = numbers(report, "residual_history")?;
            let rows = history.iter().enumerate().map(|(i, r)| vec![i.to_string(), r.to_string()]);
            vec![("residual.csv", csv(&["iteration", "residual"], rows))]
        }
        "verify" => {
            let Some(omega) = report.get("omega") else {
                bail!("verify report has no ω(r) table (run the geometry suite)");
            };
            let (r, w) = (numbers(omega, "r")?, numbers(omega, "omega")?);
            let rows = r.iter().zip(&w).map(|(r, w)| vec![r.to_string(), w.to_string()]);
            vec![("omega_r.csv", csv(&["r", "omega"], rows))]
        }
        "rotate" => {
            let hist = report.get("histogram").ok_or_else(|| anyhow!("missing `histogram`"))?;
            let edges = numbers(hist, "edges")?;
            let counts = numbers(hist, "counts")?;
            let rows = counts
                .iter()
                .enumerate()
                .map(|(i, c)| vec![edges[i].to_string(), edges[i + 1].to_string(), c.to_string()]);
            vec![("lambda_bar_histogram.csv", csv(&["bin_lo", "bin_hi", "count"], rows))]
        }
        "probe" => {
            let rows = report
                .get("rows")
                .and_then(Value::as_array)
                .ok_or_else(|| anyhow!("missing `rows`"))?
                .iter()
                .map(|row| Ok(vec![num(row, "osc")?.to_string(), num(row, "hessian_at_origin")?.to_string()]))
                .collect::<Result<Vec<_>>>()?;
            let mut files = vec![("probe_scatter.csv", csv(&["osc", "hessian_at_origin"], rows))];
            if let Some(fit) = report.get("fit").filter(|f| !f.is_null()) {
                let row = vec![
                    num(fit, "exponent")?.to_string(),
                    num(fit, "c1")?.to_string(),
                    num(fit, "c2")?.to_string(),
                    num(fit, "r_squared")?.to_string(),
                ];
                files.push(("probe_fit.csv", csv(&["exponent", "c1", "c2", "r_squared"], [row])));
            }
            files
        }
        other => bail!("unknown report kind `{other}`"),
    })
}

pub fn run(a: &ReportArgs, g: &Global) -> Result<(), Failure> {
    // Parse everything first so a bad input leaves no files behind.
    let mut files = Vec::new();
    for path in &a.inputs {
        let text = read_text(path)?;
        let report: Value = serde_json::from_str(&text).with_context(|| format!("{}", path.display()))?;
        files.extend(emit(&report).with_context(|| format!("{}", path.display()))?);
    }
    std::fs::create_dir_all(&a.out_dir).with_context(|| format!("cannot create {}", a.out_dir.display()))?;
    for (name, body) in &files {
        let path = a.out_dir.join(name);
        write_bytes(&path, body.as_bytes())?;
        if !g.quiet {
            println!("wrote {}", path.display());
        }
    }
    Ok(())
}
