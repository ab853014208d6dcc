//! Parsers for compact flag values.

use csi_shield::geometry::Point;
use csi_shield::{Error, Result};

pub fn parse_grid(s: &str) -> std::result::Result<(usize, usize), String> {
    let (a, b) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected NXxNY, got {s:?}"))?;
    let nx = a.trim().parse::<usize>().map_err(|e| e.to_string())?;
    let ny = b.trim().parse::<usize>().map_err(|e| e.to_string())?;
    if nx == 0 || ny == 0 {
        return Err("grid dimensions must be positive".into());
    }
    Ok((nx, ny))
}

pub fn parse_point(s: &str) -> std::result::Result<Point, String> {
    let (a, b) = s.split_once(',').ok_or_else(|| format!("expected X,Y, got {s:?}"))?;
    let x = a.trim().parse::<f64>().map_err(|e| e.to_string())?;
    let y = b.trim().parse::<f64>().map_err(|e| e.to_string())?;
    Ok(Point::new(x, y))
}

/// `START:STOP:STEP` with STOP included when hit, or `a,b,c`.
pub fn parse_values(s: &str) -> Result<Vec<f64>> {
    let bad = |m: String| Error::Validation {
        key: "--values".into(),
        message: m,
    };
    let num = |t: &str| t.trim().parse::<f64>().map_err(|_| bad(format!("not a number: {t:?}")));
    if s.contains(':') {
        let parts: Vec<&str> = s.split(':').collect();
        let [start, stop, step] = parts[..] else {
            return Err(bad(format!("expected START:STOP:STEP, got {s:?}")));
        };
        let (start, stop, step) = (num(start)?, num(stop)?, num(step)?);
        if step.is_nan() || step <= 0.0 || stop < start {
            return Err(bad(format!("empty or unbounded range {s:?}")));
        }
        let n = ((stop - start) / step + 1e-9).floor() as usize;
        Ok((0..=n).map(|i| start + i as f64 * step).collect())
    } else {
        s.split(',').filter(|t| !t.trim().is_empty()).map(num).collect()
    }
}

/// Values that must be whole non-negative numbers.
pub fn as_counts(values: &[f64]) -> Result<Vec<usize>> {
    values
        .iter()
        .map(|&v| {
            if v >= 0.0 && v.fract() == 0.0 {
                Ok(v as usize)
            } else {
                Err(Error::Validation {
                    key: "--values".into(),
                    message: format!("element counts must be whole numbers, got {v}"),
                })
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges_and_lists() {
        assert_eq!(parse_values("32:256:32").unwrap().len(), 8);
        assert_eq!(parse_values("0.15:1.5:0.15").unwrap().len(), 10);
        assert_eq!(parse_values("0,90,180").unwrap(), vec![0.0, 90.0, 180.0]);
        assert!(parse_values("1:2").is_err());
        assert!(parse_values("3:1:1").is_err());
        assert!(as_counts(&[1.5]).is_err());
        assert_eq!(parse_grid("5x4").unwrap(), (5, 4));
        assert!(parse_grid("0x4").is_err());
    }
}
