//! Output files: CSV tables, JSON reports and SVG diagrams, each written
//! to a temporary name in the target directory and renamed into place.

use std::f64::consts::TAU;
use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::cmv::CmvWindow;
use crate::construct::StageReport;
use crate::floquet::BandStructure;
use crate::specmeasure::SpectralDensity;

/// Write `contents` to `path` atomically (temp file plus rename).
pub fn write_atomic(path: &Path, contents: &[u8]) -> std::io::Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = dir.join(format!(".{name}.tmp{}", std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> std::io::Result<()> {
    let mut s = serde_json::to_string_pretty(value).map_err(std::io::Error::other)?;
    s.push('\n');
    write_atomic(path, s.as_bytes())
}

/// Shortest round-trip formatting, so CSV output is deterministic.
fn num(x: f64) -> String {
    format!("{x:?}")
}

pub fn bands_csv(bs: &BandStructure) -> String {
    let mut s = String::from("band_index,theta_lo,theta_hi,mass,monotonicity\n");
    for b in &bs.bands {
        let mono = if b.increasing { "increasing" } else { "decreasing" };
        let _ = writeln!(s, "{},{},{},{},{}", b.index, num(b.lo), num(b.hi), num(b.mass), mono);
    }
    s
}

/// Open gaps only; closed gaps are points of the spectrum.
pub fn gaps_csv(bs: &BandStructure) -> String {
    let mut s = String::from("gap_index,theta_lo,theta_hi,chord,open,sign\n");
    for (i, g) in bs.gaps.iter().enumerate().filter(|(_, g)| g.open) {
        let _ = writeln!(s, "{},{},{},{},{},{}", i, num(g.lo), num(g.hi), num(g.chord), g.open, g.sign);
    }
    s
}

/// `Δ(e^{iθ})` at `samples` equally spaced angles.
pub fn discriminant_csv(bs: &BandStructure, samples: usize) -> String {
    let mut s = String::from("theta,delta\n");
    for j in 0..samples {
        let t = TAU * j as f64 / samples as f64;
        let _ = writeln!(s, "{},{}", num(t), num(bs.discriminant.at(t)));
    }
    s
}

pub fn density_csv(d: &SpectralDensity) -> String {
    let mut s = String::from("theta,g\n");
    for (t, g) in &d.grid {
        let _ = writeln!(s, "{},{}", num(*t), num(*g));
    }
    s
}

pub fn window_csv(w: &CmvWindow) -> String {
    let mut s = String::from("row,col,re,im\n");
    for (r, c, v) in w.nonzeros() {
        let _ = writeln!(s, "{},{},{},{}", r, c, num(v.re), num(v.im));
    }
    s
}

pub fn stages_csv(stages: &[StageReport]) -> String {
    let ac = stages.iter().any(|s| s.density_drift.is_some());
    let mut s = String::from(
        "stage,level,period,perturbation_norm,budget_eps,budget_gap,min_gap,open_gaps,total_gaps,band_measure",
    );
    if ac {
        s.push_str(",density_drift");
    }
    s.push('\n');
    for r in stages {
        let _ = write!(
            s,
            "{},{},{},{},{},{},{},{},{},{}",
            r.stage,
            r.level,
            r.period,
            num(r.perturbation_norm),
            num(r.budget_eps),
            r.budget_gap.map(num).unwrap_or_default(),
            num(r.min_gap),
            r.open_gaps,
            r.total_gaps,
            num(r.band_measure),
        );
        if ac {
            let _ = write!(s, ",{}", r.density_drift.map(num).unwrap_or_default());
        }
        s.push('\n');
    }
    s
}

fn arc_path(cx: f64, cy: f64, r: f64, lo: f64, hi: f64) -> String {
    let (x0, y0) = (cx + r * lo.cos(), cy - r * lo.sin());
    if hi - lo >= TAU - 1e-12 {
        let (x1, y1) = (cx - r * lo.cos(), cy + r * lo.sin());
        return format!("M {x0:.4} {y0:.4} A {r} {r} 0 1 0 {x1:.4} {y1:.4} A {r} {r} 0 1 0 {x0:.4} {y0:.4}");
    }
    let (x1, y1) = (cx + r * hi.cos(), cy - r * hi.sin());
    let large = if hi - lo > TAU / 2.0 { 1 } else { 0 };
    format!("M {x0:.4} {y0:.4} A {r} {r} 0 {large} 0 {x1:.4} {y1:.4}")
}

/// Bands as arcs on concentric circles, one ring per entry; gaps are
/// marked on the outermost ring.
pub fn bands_svg(rings: &[Vec<[f64; 2]>], gaps: &[[f64; 2]]) -> String {
    let size = 400.0;
    let c = size / 2.0;
    let mut s = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{size}\" height=\"{size}\" viewBox=\"0 0 {size} {size}\">\n"
    );
    let _ = writeln!(s, "<circle cx=\"{c}\" cy=\"{c}\" r=\"170\" fill=\"none\" stroke=\"#ddd\"/>");
    let n = rings.len().max(1);
    for (i, ring) in rings.iter().enumerate() {
        let r = 170.0 - 120.0 * i as f64 / n as f64;
        for b in ring {
            let _ = writeln!(
                s,
                "<path class=\"band\" d=\"{}\" fill=\"none\" stroke=\"#1f5fa8\" stroke-width=\"6\"/>",
                arc_path(c, c, r, b[0], b[1])
            );
        }
    }
    for g in gaps {
        let _ = writeln!(
            s,
            "<path class=\"gap\" d=\"{}\" fill=\"none\" stroke=\"#d0402b\" stroke-width=\"2\"/>",
            arc_path(c, c, 180.0, g[0], g[1])
        );
    }
    s.push_str("</svg>\n");
    s
}

pub fn band_structure_svg(bs: &BandStructure) -> String {
    let rings = vec![bs.bands.iter().map(|b| [b.lo, b.hi]).collect()];
    let gaps: Vec<[f64; 2]> = bs.gaps.iter().filter(|g| g.open).map(|g| [g.lo, g.hi]).collect();
    bands_svg(&rings, &gaps)
}

/// Density over the circle angle, as a polyline.
pub fn density_svg(d: &SpectralDensity) -> String {
    let (w, h) = (600.0, 300.0);
    let gmax = d.grid.iter().map(|p| p.1).filter(|g| g.is_finite()).fold(0.0, f64::max).max(1e-12);
    let mut pts = String::new();
    for (t, g) in &d.grid {
        let x = w * t / TAU;
        let y = h - (h - 10.0) * (g.min(gmax) / gmax);
        let _ = write!(pts, "{x:.3},{y:.3} ");
    }
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\">\n\
         <polyline points=\"{}\" fill=\"none\" stroke=\"#1f5fa8\"/>\n</svg>\n",
        pts.trim_end()
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeffs::PeriodicSeq;
    use num_complex::Complex64;

    #[test]
    fn atomic_write_replaces() {
        let dir = std::env::temp_dir().join(format!("lpcmv-io-{}", std::process::id()));
        let p = dir.join("a.txt");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(fs::read_to_string(&p).unwrap(), "two");
        let leftovers = fs::read_dir(&dir).unwrap().count();
        assert_eq!(leftovers, 1);
        fs::remove_dir_all(dir).unwrap();
    }

    #[test]
    fn csv_shapes() {
        let s = PeriodicSeq::constant(Complex64::new(0.5, 0.0), 0.6).unwrap();
        let bs = crate::floquet::band_structure(&s).unwrap();
        let t = bands_csv(&bs);
        assert_eq!(t.lines().count(), 3);
        assert!(t.starts_with("band_index,theta_lo,theta_hi,mass,monotonicity"));
        assert_eq!(discriminant_csv(&bs, 16).lines().count(), 17);
        assert_eq!(gaps_csv(&bs).lines().count(), 2);
        let svg = band_structure_svg(&bs);
        assert_eq!(svg.matches("class=\"band\"").count(), 2);
        assert_eq!(svg.matches("class=\"gap\"").count(), 1);
    }
}
