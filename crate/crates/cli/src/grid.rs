use serde::Serialize;
use std::str::FromStr;

/// Uniform grid specification `start:stop:count`, or a bare number for a
/// single point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Grid {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl Grid {
    pub fn single(v: f64) -> Self {
        Self {
            start: v,
            stop: v,
            count: 1,
        }
    }

    pub fn points(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.start];
        }
        (0..self.count)
            .map(|i| {
                self.start + (self.stop - self.start) * i as f64 / (self.count - 1) as f64
            })
            .collect()
    }
}

impl FromStr for Grid {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        match parts.len() {
            1 => {
                let v: f64 = parts[0]
                    .trim()
                    .parse()
                    .map_err(|e| format!("bad grid value {s:?}: {e}"))?;
                Ok(Grid::single(v))
            }
            3 => {
                let start: f64 = parts[0]
                    .trim()
                    .parse()
                    .map_err(|e| format!("bad grid start in {s:?}: {e}"))?;
                let stop: f64 = parts[1]
                    .trim()
                    .parse()
                    .map_err(|e| format!("bad grid stop in {s:?}: {e}"))?;
                let count: usize = parts[2]
                    .trim()
                    .parse()
                    .map_err(|e| format!("bad grid count in {s:?}: {e}"))?;
                if count == 0 {
                    return Err(format!("grid count must be at least 1 in {s:?}"));
                }
                if count == 1 && start != stop {
                    return Err(format!("single-point grid must have start == stop in {s:?}"));
                }
                Ok(Grid { start, stop, count })
            }
            _ => Err(format!("grid must be `value` or `start:stop:count`, got {s:?}")),
        }
    }
}

/// Comma-separated system sizes, e.g. `16,32,64`.
pub fn parse_sizes(s: &str) -> Result<Vec<u32>, String> {
    let mut out = Vec::new();
    for part in s.split(',') {
        let v: u32 = part
            .trim()
            .parse()
            .map_err(|e| format!("bad size {part:?}: {e}"))?;
        if v == 0 {
            return Err("sizes must be positive".into());
        }
        out.push(v);
    }
    if out.is_empty() {
        return Err("need at least one size".into());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_grids() {
        let g: Grid = "0:1.5:4".parse().unwrap();
        assert_eq!(g.points(), vec![0.0, 0.5, 1.0, 1.5]);
        let g: Grid = "0.7".parse().unwrap();
        assert_eq!(g.points(), vec![0.7]);
        assert!("1:2".parse::<Grid>().is_err());
        assert!("1:2:0".parse::<Grid>().is_err());
    }

    #[test]
    fn parses_sizes() {
        assert_eq!(parse_sizes("16, 32,64").unwrap(), vec![16, 32, 64]);
        assert!(parse_sizes("16,0").is_err());
        assert!(parse_sizes("x").is_err());
    }
}
