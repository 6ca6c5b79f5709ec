//! Point CSV and density spec parsing.

use std::io::Read;
use std::path::Path;

use logconcave::densities::Gaussian;
use logconcave::harness::DensitySpec;
use logconcave::{DensityModel, Point};

use crate::Failure;

/// Reads one point per row. Commas or whitespace separate coordinates; a
/// non-numeric first row is a header; `#` starts a comment.
pub fn read_points(path: &Path) -> Result<Vec<Point>, Failure> {
    let text = if path.as_os_str() == "-" {
        let mut s = String::new();
        std::io::stdin().read_to_string(&mut s).map_err(|e| Failure::Runtime(e.to_string()))?;
        s
    } else {
        std::fs::read_to_string(path).map_err(|e| Failure::Invalid(format!("{}: {e}", path.display())))?
    };
    parse_points(&text)
}

pub fn parse_points(text: &str) -> Result<Vec<Point>, Failure> {
    let mut out: Vec<Point> = Vec::new();
    let mut first = true;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(|c: char| c == ',' || c.is_whitespace()).filter(|t| !t.is_empty()).collect();
        let parsed: Result<Vec<f64>, _> = fields.iter().map(|t| t.parse::<f64>()).collect();
        let coords = match parsed {
            Ok(v) => v,
            Err(_) if first => {
                first = false;
                continue;
            }
            Err(e) => return Err(Failure::Invalid(format!("row {}: {e}", i + 1))),
        };
        first = false;
        if let Some(p) = out.first() {
            if p.dim() != coords.len() {
                return Err(Failure::Invalid(format!("row {}: {} columns, expected {}", i + 1, coords.len(), p.dim())));
            }
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Failure::Invalid(format!("row {}: non-finite coordinate", i + 1)));
        }
        out.push(Point::new(coords));
    }
    if out.is_empty() {
        return Err(Failure::Invalid("no points".into()));
    }
    Ok(out)
}

pub fn write_points(points: &[Point]) -> String {
    let mut s = String::new();
    for p in points {
        let row: Vec<String> = p.iter().map(|c| format!("{c}")).collect();
        s.push_str(&row.join(","));
        s.push('\n');
    }
    s
}

/// What a spec string names: a density, or the unit circle.
pub enum Law {
    Density(DensityModel),
    Circle,
}

/// `gaussian:<m1,m2,...>` is a unit-covariance Gaussian with that mean;
/// everything else goes through [`DensitySpec`].
pub fn parse_law(spec: &str, d: usize) -> Result<Law, Failure> {
    if d == 0 {
        return Err(Failure::Invalid("d must be at least 1".into()));
    }
    if let Some(mean) = spec.strip_prefix("gaussian:") {
        let m: Result<Vec<f64>, _> = mean.split(',').map(|t| t.trim().parse::<f64>()).collect();
        let m = m.map_err(|e| Failure::Invalid(format!("{spec}: {e}")))?;
        if m.len() != d {
            return Err(Failure::Invalid(format!("{spec}: mean has {} coordinates, d = {d}", m.len())));
        }
        let mut cov = vec![0.0; d * d];
        for i in 0..d {
            cov[i * d + i] = 1.0;
        }
        let g = Gaussian::new(m, cov).map_err(|e| Failure::Invalid(e.to_string()))?;
        return Ok(Law::Density(DensityModel::Gaussian(g)));
    }
    let ds: DensitySpec = spec.parse().map_err(Failure::Invalid)?;
    if ds == DensitySpec::UnitCircle {
        return if d == 2 { Ok(Law::Circle) } else { Err(Failure::Invalid("circle needs d = 2".into())) };
    }
    ds.build(d).map(Law::Density).map_err(|e| Failure::Invalid(e.to_string()))
}

pub fn parse_density(spec: &str, d: usize) -> Result<DensityModel, Failure> {
    match parse_law(spec, d)? {
        Law::Density(f) => Ok(f),
        Law::Circle => Err(Failure::Invalid("the unit circle has no density".into())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_and_separators() {
        let p = parse_points("x,y\n1,2\n3 4\n# note\n5,\t6\n").unwrap();
        assert_eq!(p.len(), 3);
        assert_eq!(&p[1][..], &[3.0, 4.0]);
    }

    #[test]
    fn ragged_rows_are_rejected() {
        assert!(matches!(parse_points("1,2\n3\n"), Err(Failure::Invalid(_))));
        assert!(matches!(parse_points("a\nb\n"), Err(Failure::Invalid(_))));
    }

    #[test]
    fn shifted_gaussian() {
        let Law::Density(f) = parse_law("gaussian:1,0", 2).unwrap() else { panic!() };
        assert!((f.ln_pdf(&[1.0, 0.0]) + (2.0 * std::f64::consts::PI).ln()).abs() < 1e-12);
        assert!(parse_law("gaussian:1", 2).is_err());
    }
}
