use anyhow::{bail, Result};
use kcontact::{DomainSpec, LatticeState, Site};

use crate::config::Format;

const RAMP: &[u8] = b" .:-=+*#%@";

pub struct Rendered {
    pub bytes: Vec<u8>,
    pub warnings: Vec<String>,
}

/// Rows of the finite box, each row running along the last axis. Leading
/// coordinates vary lexicographically.
fn rows(domain: &DomainSpec) -> Result<Vec<Vec<Site>>> {
    let Some(n) = domain.linear_size() else {
        bail!("snapshots need a finite domain");
    };
    let h = (n as i32 - 1) / 2;
    let d = domain.dim;
    let leading = (n as usize).pow(d as u32 - 1);
    let mut out = Vec::with_capacity(leading);
    for r in 0..leading {
        let mut prefix = vec![0i32; d - 1];
        let mut rem = r;
        for k in (0..d - 1).rev() {
            prefix[k] = (rem % n as usize) as i32 - h;
            rem /= n as usize;
        }
        out.push(
            (-h..=h)
                .map(|c| {
                    let mut coords = prefix.clone();
                    coords.push(c);
                    Site::new(&coords)
                })
                .collect(),
        );
    }
    Ok(out)
}

/// Renders a configuration as a plain PGM (2-d only, grey = round(255 ξ))
/// or as ASCII art binned by value decile.
pub fn render_snapshot(state: &LatticeState<f64>, domain: &DomainSpec, format: Format) -> Result<Rendered> {
    let rows = rows(domain)?;
    let mut warnings = Vec::new();
    let mut clipped = 0usize;
    let mut bytes = Vec::new();
    match format {
        Format::Pgm => {
            if domain.dim != 2 {
                bail!("pgm snapshots need a 2-d domain, got d = {}", domain.dim);
            }
            let n = rows.len();
            bytes.extend_from_slice(format!("P2\n{n} {n}\n255\n").as_bytes());
            for row in &rows {
                let line: Vec<String> = row
                    .iter()
                    .map(|s| {
                        let v = state.get(s);
                        if v > 1.0 {
                            clipped += 1;
                        }
                        ((v.clamp(0.0, 1.0) * 255.0).round() as u8).to_string()
                    })
                    .collect();
                bytes.extend_from_slice(line.join(" ").as_bytes());
                bytes.push(b'\n');
            }
        }
        Format::Ascii => {
            for row in &rows {
                for s in row {
                    let v = state.get(s);
                    if v > 1.0 {
                        clipped += 1;
                    }
                    let bin = ((v.clamp(0.0, 1.0) * 10.0).floor() as usize).min(9);
                    bytes.push(RAMP[bin]);
                }
                bytes.push(b'\n');
            }
        }
    }
    if clipped > 0 {
        warnings.push(format!("{clipped} site values above 1 were clipped"));
    }
    Ok(Rendered { bytes, warnings })
}
