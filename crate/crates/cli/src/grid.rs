use std::str::FromStr;

use codescale::search::log_space;

/// A list of positive values given either as `a,b,c` or `log:min:max:count`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid(pub Vec<f64>);

impl FromStr for Grid {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if let Some(rest) = s.strip_prefix("log:") {
            let parts: Vec<&str> = rest.split(':').collect();
            let [min, max, count] = parts[..] else {
                return Err(format!("expected log:MIN:MAX:COUNT, got `{s}`"));
            };
            let min: f64 = num(min)?;
            let max: f64 = num(max)?;
            let count: usize = count.parse().map_err(|_| format!("`{count}` is not a point count"))?;
            return log_space(min, max, count).map(Grid).map_err(|e| e.to_string());
        }
        let values = s.split(',').map(|v| num(v.trim())).collect::<Result<Vec<f64>, _>>()?;
        if values.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(format!("grid values must be positive, got `{s}`"));
        }
        Ok(Grid(values))
    }
}

fn num(s: &str) -> Result<f64, String> {
    s.parse().map_err(|_| format!("`{s}` is not a number"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_lists_and_log_specs() {
        assert_eq!("1e9,2e9".parse::<Grid>().unwrap(), Grid(vec![1e9, 2e9]));
        let g: Grid = "log:1e19:1e23:5".parse().unwrap();
        assert_eq!(g.0.len(), 5);
        assert_eq!(g.0[0], 1e19);
        assert!("log:1:2".parse::<Grid>().is_err());
        assert!("1,-2".parse::<Grid>().is_err());
        assert!("x".parse::<Grid>().is_err());
    }
}
