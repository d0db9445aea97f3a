//! Deterministic file emitters and loaders: CSV tables with a config echo
//! header, the λλ' matrix JSON, form-factor tables, and density-kernel
//! import/export.
//!
//! CSV dialect: comma separators, '.' decimal point, complex values as
//! paired re/im columns, mandatory header row. Floats are printed with
//! Rust's shortest round-trip formatting, so identical inputs produce
//! byte-identical files.

use anyhow::{bail, Context, Result};
use mrad_core::kernels::FormFactors;
use mrad_core::packets::{SpinKernel, SpinMat};
use mrad_core::vec3::Vec3;
use mrad_core::Complex64;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

/// Format a float with shortest round-trip representation.
pub fn fmt_f64(x: f64) -> String {
    if x == 0.0 {
        // normalize -0
        "0".into()
    } else {
        format!("{x}")
    }
}

/// A CSV table under construction: echo header, column names, rows.
pub struct CsvTable {
    echo: String,
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new(config_echo: &str, header: &[&str]) -> Self {
        Self {
            echo: config_echo.to_string(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push_row(&mut self, cells: Vec<String>) {
        assert_eq!(cells.len(), self.header.len(), "row width mismatch");
        self.rows.push(cells);
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for line in self.echo.lines() {
            let _ = writeln!(out, "# {line}");
        }
        let _ = writeln!(out, "{}", self.header.join(","));
        for row in &self.rows {
            let _ = writeln!(out, "{}", row.join(","));
        }
        out
    }

    pub fn write_atomic(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.render().as_bytes())
    }
}

/// Write through a temp file and rename, so partial outputs never appear.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)
            .with_context(|| format!("creating output dir {}", dir.display()))?;
    }
    let tmp = path.with_extension("tmp");
    {
        let mut f = std::fs::File::create(&tmp)
            .with_context(|| format!("creating {}", tmp.display()))?;
        f.write_all(bytes)?;
        f.sync_all().ok();
    }
    std::fs::rename(&tmp, path)
        .with_context(|| format!("renaming into {}", path.display()))?;
    Ok(())
}

/// Extract the config echo from an emitted file (the `# `-prefixed头 lines
/// before the header row).
pub fn read_config_echo(text: &str) -> String {
    let mut out = String::new();
    for line in text.lines() {
        if let Some(rest) = line.strip_prefix("# ") {
            out.push_str(rest);
            out.push('\n');
        } else if line.starts_with('#') {
            out.push('\n');
        } else {
            break;
        }
    }
    out
}

/// Load a `(q², F_e, F_m)` table with linear interpolation.
pub fn load_form_factors_csv(path: &Path) -> Result<FormFactors> {
    let text = std::fs::read_to_string(path)?;
    let mut points = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if i == 0 && line.chars().next().is_some_and(|c| c.is_alphabetic()) {
            continue; // header row
        }
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != 3 {
            bail!("form-factor row {} must have 3 columns", i + 1);
        }
        points.push((
            cells[0].trim().parse::<f64>()?,
            cells[1].trim().parse::<f64>()?,
            cells[2].trim().parse::<f64>()?,
        ));
    }
    if points.len() < 2 {
        bail!("form-factor table needs at least two rows");
    }
    Ok(FormFactors::tabulated(points))
}

/// Export a density kernel sampled on a momentum point list:
/// columns `(p, p', s, s', re, im)`.
pub fn export_kernel_csv(
    density: &dyn SpinKernel,
    samples: &[(Vec3, Vec3)],
    echo: &str,
    path: &Path,
) -> Result<()> {
    let mut table = CsvTable::new(
        echo,
        &[
            "px", "py", "pz", "ppx", "ppy", "ppz", "s", "sp", "re", "im",
        ],
    );
    for &(p, pp) in samples {
        let k = density.kernel(p, pp);
        for s in 0..2 {
            for sp in 0..2 {
                table.push_row(vec![
                    fmt_f64(p[0]),
                    fmt_f64(p[1]),
                    fmt_f64(p[2]),
                    fmt_f64(pp[0]),
                    fmt_f64(pp[1]),
                    fmt_f64(pp[2]),
                    s.to_string(),
                    sp.to_string(),
                    fmt_f64(k[s][sp].re),
                    fmt_f64(k[s][sp].im),
                ]);
            }
        }
    }
    table.write_atomic(path)
}

/// Kernel table read back from CSV: exact-sample lookup keyed by the
/// quantized sample coordinates.
#[derive(Debug, Clone, Default)]
pub struct TabulatedKernel {
    entries: BTreeMap<(u64, u64, u64, u64, u64, u64, u8, u8), Complex64>,
}

fn qbits(x: f64) -> u64 {
    x.to_bits()
}

impl TabulatedKernel {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut entries = BTreeMap::new();
        for line in text.lines() {
            if line.starts_with('#') || line.starts_with("px") || line.trim().is_empty() {
                continue;
            }
            let c: Vec<&str> = line.split(',').collect();
            if c.len() != 10 {
                bail!("kernel row must have 10 columns");
            }
            let f = |i: usize| -> Result<f64> { Ok(c[i].trim().parse::<f64>()?) };
            let key = (
                qbits(f(0)?),
                qbits(f(1)?),
                qbits(f(2)?),
                qbits(f(3)?),
                qbits(f(4)?),
                qbits(f(5)?),
                c[6].trim().parse::<u8>()?,
                c[7].trim().parse::<u8>()?,
            );
            entries.insert(key, Complex64::new(f(8)?, f(9)?));
        }
        Ok(Self { entries })
    }

    pub fn get(&self, p: Vec3, pp: Vec3, s: usize, sp: usize) -> Option<Complex64> {
        self.entries
            .get(&(
                qbits(p[0]),
                qbits(p[1]),
                qbits(p[2]),
                qbits(pp[0]),
                qbits(pp[1]),
                qbits(pp[2]),
                s as u8,
                sp as u8,
            ))
            .copied()
    }

    pub fn kernel_at(&self, p: Vec3, pp: Vec3) -> Option<SpinMat> {
        let mut m = [[Complex64::new(0.0, 0.0); 2]; 2];
        for s in 0..2 {
            for sp in 0..2 {
                m[s][sp] = self.get(p, pp, s, sp)?;
            }
        }
        Some(m)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Debug dump of an oracle operator matrix as `(row, col, re, im)` rows.
pub fn export_operator_csv(mat: &mrad_core::linalg::CMat, echo: &str, path: &Path) -> Result<()> {
    let mut table = CsvTable::new(echo, &["row", "col", "re", "im"]);
    for r in 0..mat.rows() {
        for c in 0..mat.cols() {
            let v = mat[(r, c)];
            if v.norm_sqr() == 0.0 {
                continue;
            }
            table.push_row(vec![
                r.to_string(),
                c.to_string(),
                fmt_f64(v.re),
                fmt_f64(v.im),
            ]);
        }
    }
    table.write_atomic(path)
}

/// Export a Wigner view as `(x, p, value)` rows (scalar part).
pub fn export_wigner_csv(
    view: &mrad_core::wigner::WignerView,
    echo: &str,
    path: &Path,
) -> Result<()> {
    let mut table = CsvTable::new(
        echo,
        &["x1", "x2", "x3", "p1", "p2", "p3", "rho_re", "rho_im"],
    );
    for (xi, &x) in view.x_points.iter().enumerate() {
        for (pi, &p) in view.p_points.iter().enumerate() {
            let v = view.value(xi, pi);
            table.push_row(vec![
                fmt_f64(x[0]),
                fmt_f64(x[1]),
                fmt_f64(x[2]),
                fmt_f64(p[0]),
                fmt_f64(p[1]),
                fmt_f64(p[2]),
                fmt_f64(v.re),
                fmt_f64(v.im),
            ]);
        }
    }
    table.write_atomic(path)
}

/// Serialize the per-point Hermitian λλ' matrices as JSON (hand-rolled:
/// the structure is fixed and small).
pub fn spectral_matrices_json(points: &[mrad_core::spontaneous::SpectralPoint]) -> String {
    let mut out = String::from("[\n");
    for (i, sp) in points.iter().enumerate() {
        let m = &sp.matrix;
        let _ = write!(
            out,
            "  {{\"k\":[{},{},{}],\"matrix\":[",
            fmt_f64(sp.point.k[0]),
            fmt_f64(sp.point.k[1]),
            fmt_f64(sp.point.k[2])
        );
        for l in 0..2 {
            for lp in 0..2 {
                let _ = write!(
                    out,
                    "[{},{}]{}",
                    fmt_f64(m[l][lp].re),
                    fmt_f64(m[l][lp].im),
                    if l == 1 && lp == 1 { "" } else { "," }
                );
            }
        }
        let _ = writeln!(out, "]}}{}", if i + 1 == points.len() { "" } else { "," });
    }
    out.push_str("]\n");
    out
}
