use nalgebra::DMatrix;

use super::measure::{AtomicYoungMeasure, JetAtom};
use crate::error::{Error, Result};
use crate::meshmaps::io_support::{fmt_f64, Lines};

/// Serialize: header `k n m #atoms`, then per atom
/// `cell t… x… v(row-major)… weight`.
pub fn write_measure(eta: &AtomicYoungMeasure) -> String {
    let (n, m) = (eta.domain_dim(), eta.target_dim());
    let mut s = format!("{} {n} {m} {}\n", eta.degree(), eta.atoms().len());
    for a in eta.atoms() {
        let mut fields = vec![a.cell.to_string()];
        fields.extend(a.flatten().into_iter().map(fmt_f64));
        fields.push(fmt_f64(a.weight));
        s += &fields.join(" ");
        s.push('\n');
    }
    s
}

/// Parse the format of [`write_measure`]. The result carries no mesh.
pub fn read_measure(text: &str) -> Result<AtomicYoungMeasure> {
    let mut lines = Lines::new(text);
    let header: Vec<usize> = lines.parse_row(Some(4))?;
    let (k, n, m, count) = (header[0], header[1], header[2], header[3]);
    if n == 0 || m == 0 || n > crate::exterior::MAX_MAP_DIM || m > crate::exterior::MAX_MAP_DIM {
        return Err(lines.err("unsupported dimensions"));
    }
    if count > 10_000_000 {
        return Err(Error::Resource(format!("{count} atoms")));
    }
    let width = 2 + n + m + m * n;
    let mut atoms = Vec::with_capacity(count);
    for _ in 0..count {
        let line = lines.next_line()?;
        let words: Vec<&str> = line.split_whitespace().collect();
        if words.len() != width {
            return Err(lines.err(&format!("expected {width} fields, found {}", words.len())));
        }
        let cell = words[0].parse::<usize>().map_err(|_| lines.err("bad cell index"))?;
        let vals: Vec<f64> = words[1..]
            .iter()
            .map(|w| w.parse::<f64>().map_err(|_| lines.err(&format!("cannot parse `{w}`"))))
            .collect::<Result<_>>()?;
        let t = vals[..n].to_vec();
        let x = vals[n..n + m].to_vec();
        let v = DMatrix::from_row_slice(m, n, &vals[n + m..n + m + m * n]);
        atoms.push(JetAtom { cell, t, x, v, weight: vals[width - 2] });
    }
    lines.expect_end()?;
    AtomicYoungMeasure::new(None, n, m, k, atoms)
}
