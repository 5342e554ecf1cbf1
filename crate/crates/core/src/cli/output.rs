//! Run directories, CSV helpers, the provenance manifest and SVG plots.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use ndarray::ArrayView2;
use serde::Serialize;
use tfavar::error::{Error, Result};
use tfavar::panel::write_matrix_csv;
use tfavar::simulate::RNG_ALGORITHM;

pub struct Context {
    pub argv: Vec<String>,
    pub threads: usize,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(io_err(path))
}

pub fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

/// Output directory of one command. Files are addressed relative to the
/// root and listed in the manifest with their sizes.
pub struct RunDir {
    root: PathBuf,
}

impl RunDir {
    pub fn create(root: &Path) -> Result<Self> {
        fs::create_dir_all(root).map_err(io_err(root))?;
        Ok(Self { root: root.to_path_buf() })
    }

    pub fn path(&self, rel: &str) -> PathBuf {
        self.root.join(rel)
    }

    pub fn write_text(&self, rel: &str, text: &str) -> Result<()> {
        let path = self.path(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(io_err(parent))?;
        }
        fs::write(&path, text).map_err(io_err(&path))
    }

    pub fn append_text(&self, rel: &str, text: &str) -> Result<()> {
        let path = self.path(rel);
        let mut f = fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(io_err(&path))?;
        f.write_all(text.as_bytes()).map_err(io_err(&path))
    }

    pub fn write_matrix<S: AsRef<str>>(&self, rel: &str, header: &[S], values: ArrayView2<f64>) -> Result<()> {
        let mut buf = Vec::new();
        write_matrix_csv(&mut buf, header, values)?;
        self.write_text(rel, std::str::from_utf8(&buf).expect("csv output is utf-8"))
    }

    /// Writes rows of already formatted fields.
    pub fn write_rows(&self, rel: &str, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
        self.write_text(rel, &rows_to_csv(header, rows))
    }

    /// Writes `config.toml` and `manifest.toml`. Call last so the file
    /// listing is complete.
    pub fn finish<C: Serialize>(&self, ctx: &Context, command: &str, config: &C) -> Result<()> {
        let snapshot = toml::to_string(config).map_err(|e| Error::InvalidArgument(format!("config snapshot: {e}")))?;
        self.write_text("config.toml", &snapshot)?;

        let mut files = Vec::new();
        collect_files(&self.root, &self.root, &mut files)?;
        files.retain(|(rel, _)| rel != "manifest.toml");
        files.sort();

        let mut m = String::new();
        writeln!(m, "tool = \"tfavar\"").unwrap();
        writeln!(m, "version = {:?}", env!("CARGO_PKG_VERSION")).unwrap();
        writeln!(m, "command = {command:?}").unwrap();
        writeln!(m, "rng = {RNG_ALGORITHM:?}").unwrap();
        writeln!(m, "threads = {}", ctx.threads).unwrap();
        let argv: Vec<String> = ctx.argv.iter().map(|a| format!("{a:?}")).collect();
        writeln!(m, "argv = [{}]", argv.join(", ")).unwrap();
        writeln!(m, "\n[config]").unwrap();
        m.push_str(&snapshot);
        for (rel, size) in files {
            writeln!(m, "\n[[file]]\npath = {rel:?}\nbytes = {size}").unwrap();
        }
        self.write_text("manifest.toml", &m)
    }
}

fn collect_files(root: &Path, dir: &Path, out: &mut Vec<(String, u64)>) -> Result<()> {
    for entry in fs::read_dir(dir).map_err(io_err(dir))? {
        let entry = entry.map_err(io_err(dir))?;
        let path = entry.path();
        let meta = entry.metadata().map_err(io_err(&path))?;
        if meta.is_dir() {
            collect_files(root, &path, out)?;
        } else {
            let rel = path.strip_prefix(root).unwrap().to_string_lossy().replace('\\', "/");
            out.push((rel, meta.len()));
        }
    }
    Ok(())
}

pub fn rows_to_csv(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
}

/// A headed numeric table as read back from disk.
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn read(path: &Path) -> Result<Self> {
        let text = read_text(path)?;
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
        let header: Vec<String> = rdr
            .headers()
            .map_err(|e| Error::Csv(format!("{}: {e}", path.display())))?
            .iter()
            .map(str::to_owned)
            .collect();
        let mut rows = Vec::new();
        for (r, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| Error::Csv(format!("{}: {e}", path.display())))?;
            let row = rec
                .iter()
                .enumerate()
                .map(|(c, f)| {
                    f.parse::<f64>().map_err(|_| Error::Parse {
                        row: r + 1,
                        column: c + 1,
                        value: f.to_owned(),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            if row.len() != header.len() {
                return Err(Error::Ragged {
                    row: r + 1,
                    expected: header.len(),
                    found: row.len(),
                });
            }
            rows.push(row);
        }
        if rows.is_empty() {
            return Err(Error::EmptyInput);
        }
        Ok(Self { header, rows })
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }
}

/// Line plot of one fluctuation path with the ± critical-value bands.
pub fn fluctuation_svg(title: &str, path: &[f64], crit: f64) -> String {
    let (w, h, pad) = (640.0, 320.0, 40.0);
    let bound = path.iter().fold(crit, |m, v| m.max(v.abs())) * 1.1;
    let n = path.len().max(2) as f64 - 1.0;
    let x = |i: usize| pad + (w - 2.0 * pad) * i as f64 / n;
    let y = |v: f64| h / 2.0 - (h / 2.0 - pad) * v / bound;

    let mut s = String::new();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
    )
    .unwrap();
    writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#).unwrap();
    writeln!(s, r#"<text x="{pad}" y="20" font-family="sans-serif" font-size="13">{}</text>"#, escape(title)).unwrap();
    for (v, colour) in [(0.0, "#999"), (crit, "#c33"), (-crit, "#c33")] {
        writeln!(
            s,
            r#"<line x1="{pad}" y1="{yv:.2}" x2="{x2}" y2="{yv:.2}" stroke="{colour}" stroke-dasharray="4 3"/>"#,
            yv = y(v),
            x2 = w - pad
        )
        .unwrap();
    }
    let pts: Vec<String> = path.iter().enumerate().map(|(i, v)| format!("{:.2},{:.2}", x(i), y(*v))).collect();
    writeln!(s, r##"<polyline fill="none" stroke="#1f5fa8" stroke-width="1.5" points="{}"/>"##, pts.join(" ")).unwrap();
    s.push_str("</svg>\n");
    s
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_lists_files() {
        let dir = tempfile::tempdir().unwrap();
        let run = RunDir::create(dir.path()).unwrap();
        run.write_text("a.csv", "x\n1\n").unwrap();
        run.write_text("sub/b.csv", "y\n").unwrap();
        let ctx = Context {
            argv: vec!["tfavar".into()],
            threads: 1,
        };
        #[derive(Serialize)]
        struct C {
            k: u32,
        }
        run.finish(&ctx, "test", &C { k: 3 }).unwrap();
        let m: toml::Table = toml::from_str(&read_text(&run.path("manifest.toml")).unwrap()).unwrap();
        let files = m["file"].as_array().unwrap();
        let paths: Vec<&str> = files.iter().map(|f| f["path"].as_str().unwrap()).collect();
        assert_eq!(paths, ["a.csv", "config.toml", "sub/b.csv"]);
        assert_eq!(files[0]["bytes"].as_integer(), Some(4));
        assert_eq!(m["config"]["k"].as_integer(), Some(3));
    }

    #[test]
    fn svg_has_polyline() {
        let s = fluctuation_svg("V1 <x>", &[0.0, 1.0, -2.0], 3.0);
        assert!(s.contains("<polyline") && s.contains("&lt;x&gt;"));
    }
}
